"""Scripted runs: ground truth, noisy sensors and three estimators stepping in lockstep.

The estimators are dead-reckoning odometry, a filter corrected by line features only, and a filter corrected by line
features plus the absolute heading.
"""

import enum
from collections.abc import Iterator
from enum import StrEnum
from typing import Annotated, Final, Self, final

import numpy as np
from pydantic import Field, field_validator, model_validator

from segekf.core.ekf import Ekf, EkfConfig, MeasurementBundle, build_measurement
from segekf.core.errors import ScenarioError
from segekf.core.extraction import ExtractedSegment, ExtractionConfig, extract_segments
from segekf.core.geometry import Pose, segment_to_global_frame
from segekf.core.kinematics import RobotParams, WheelSpeeds, step
from segekf.core.matching import GlobalMap, MatchConfig
from segekf.core.uncertainty import PointNoise
from segekf.sim.world import SensorConfig, SensorStreams, World, encoder_readout, heading_sensor, raycast_scan
from segekf.tracing import Tracer
from segekf.utils import Entity

__all__: Final[tuple[str, ...]] = (
    "CommandBlock",
    "Estimator",
    "RunLog",
    "RunRow",
    "ScanSchedule",
    "Scenario",
    "SkipRecord",
    "WorldConfig",
    "run_scenario",
)

_TRACER: Final[Tracer] = Tracer(__name__)

type Quad = tuple[float, float, float, float]
type Triple = tuple[float, float, float]


@final
class Estimator(StrEnum):
    ODOMETRY = enum.auto()
    EKF_LRF = enum.auto()
    EKF_FULL = enum.auto()


@final
class CommandBlock(Entity):
    """Wheel speeds in rad/s held for ``steps`` sample periods."""

    omega_l: float
    omega_r: float
    steps: Annotated[int, Field(ge=1)]

    @property
    def speeds(self: Self, /) -> WheelSpeeds:
        return WheelSpeeds(self.omega_l, self.omega_r)


@final
class WorldConfig(Entity):
    walls: Annotated[tuple[Quad, ...], Field(min_length=1)]

    @field_validator("walls")
    @classmethod
    def _check_walls(cls: type[Self], /, walls: tuple[Quad, ...]) -> tuple[Quad, ...]:
        for index, (x1, y1, x2, y2) in enumerate(walls):
            if (x1, y1) == (x2, y2):
                message: Final[str] = f"Wall {index} has coinciding endpoints at ({x1}, {y1})."
                raise ValueError(message)

        return walls

    def build(self: Self, /) -> World:
        return World.from_coordinates(self.walls)


@final
class ScanSchedule(Entity):
    """Which steps get a range scan and a heading reading.

    ``scan_outages`` are half-open ``[start, stop)`` step ranges without scans.
    """

    scan_every: Annotated[int, Field(ge=1)] = 1
    scan_outages: tuple[tuple[Annotated[int, Field(ge=0)], Annotated[int, Field(ge=0)]], ...] = ()
    heading_every: Annotated[int, Field(ge=1)] = 1
    map_from_first_scan: bool = False

    @model_validator(mode="after")
    def _check_outages(self: Self, /) -> Self:
        for start, stop in self.scan_outages:
            if stop <= start:
                message: Final[str] = f"Scan outage [{start}, {stop}) is empty."
                raise ValueError(message)

        return self

    def scans_at(self: Self, /, index: int) -> bool:
        return index % self.scan_every == 0 and not any(start <= index < stop for start, stop in self.scan_outages)

    def heading_at(self: Self, /, index: int) -> bool:
        return index % self.heading_every == 0


@final
class Scenario(Entity):
    world: WorldConfig
    robot: RobotParams = RobotParams()
    start: Triple = (0.0, 0.0, 0.0)
    initial_estimate: Triple | None = None
    commands: Annotated[tuple[CommandBlock, ...], Field(min_length=1)]
    seed: Annotated[int, Field(ge=0, lt=2**64)] = 0
    encoder_delta: Annotated[float, Field(ge=0.0)] = 0.01
    sensor: SensorConfig = SensorConfig()
    extraction: ExtractionConfig = ExtractionConfig()
    matching: MatchConfig = MatchConfig()
    ekf: EkfConfig = EkfConfig()
    schedule: ScanSchedule = ScanSchedule()

    @property
    def step_count(self: Self, /) -> int:
        return sum(block.steps for block in self.commands)

    def with_seed(self: Self, /, seed: int) -> "Scenario":
        return self.model_validate(self.model_dump() | {"seed": seed})

    def iter_commands(self: Self, /) -> Iterator[WheelSpeeds]:
        for block in self.commands:
            for _ in range(block.steps):
                yield block.speeds


@final
class RunRow(Entity):
    """One line of the trajectory report; errors are Euclidean position errors in meters."""

    step: int
    t: float
    true_x: float
    true_y: float
    true_th: float
    odo_x: float
    odo_y: float
    odo_th: float
    ekf_lrf_x: float
    ekf_lrf_y: float
    ekf_lrf_th: float
    ekf_full_x: float
    ekf_full_y: float
    ekf_full_th: float
    err_odo: float
    err_lrf: float
    err_full: float
    matches: int

    def final_error(self: Self, /, estimator: Estimator) -> float:
        match estimator:
            case Estimator.ODOMETRY:
                return self.err_odo

            case Estimator.EKF_LRF:
                return self.err_lrf

            case Estimator.EKF_FULL:
                return self.err_full


@final
class SkipRecord(Entity):
    step: int
    estimator: Estimator
    reason: str


@final
class RunLog(Entity):
    """Per-step record of a run plus the worst covariance health seen by either filter."""

    seed: int
    rows: tuple[RunRow, ...]
    skips: tuple[SkipRecord, ...] = ()
    max_asymmetry: float = 0.0
    min_eigenvalue: float = 0.0

    @property
    def last(self: Self, /) -> RunRow:
        return self.rows[-1]


def _row(index: int, t: float, truth: Pose, estimates: tuple[Pose, Pose, Pose], matches: int) -> RunRow:
    odometry, lrf, full = estimates
    return RunRow(
        step=index,
        t=t,
        true_x=truth.x,
        true_y=truth.y,
        true_th=truth.theta,
        odo_x=odometry.x,
        odo_y=odometry.y,
        odo_th=odometry.theta,
        ekf_lrf_x=lrf.x,
        ekf_lrf_y=lrf.y,
        ekf_lrf_th=lrf.theta,
        ekf_full_x=full.x,
        ekf_full_y=full.y,
        ekf_full_th=full.theta,
        err_odo=truth.distance_to(odometry),
        err_lrf=truth.distance_to(lrf),
        err_full=truth.distance_to(full),
        matches=matches,
    )


def _first_scan_map(scenario: Scenario, world: World, truth: Pose, start: Pose, streams: SensorStreams) -> GlobalMap:
    features: Final[list[ExtractedSegment]] = extract_segments(
        raycast_scan(world, truth, scenario.sensor, streams.lrf), scenario.extraction
    )
    if len(features) == 0:
        message: Final[str] = "The first scan shows no wall to build the map from."
        raise ScenarioError(message)

    return GlobalMap(tuple(segment_to_global_frame(feature.endpoints, start) for feature in features))


@_TRACER.with_span_sync(Tracer.INFO, "run_scenario")
def run_scenario(scenario: Scenario, /) -> RunLog:
    """Simulate ``scenario`` for its seed; the same scenario always yields the same log."""
    streams: Final[SensorStreams] = SensorStreams.from_seed(scenario.seed)
    world: Final[World] = scenario.world.build()
    truth: Pose = Pose(*scenario.start)
    start: Final[Pose] = Pose(*(scenario.initial_estimate or scenario.start))
    global_map: Final[GlobalMap] = (
        _first_scan_map(scenario, world, truth, start, streams)
        if scenario.schedule.map_from_first_scan
        else world.to_map()
    )
    noise: Final[PointNoise] = PointNoise.isotropic(
        scenario.ekf.point_sigma if scenario.ekf.point_sigma is not None else scenario.sensor.range_noise_sigma
    )

    odometry: Final[Ekf] = Ekf.starting_at(start, scenario.robot, scenario.ekf)
    lrf: Final[Ekf] = Ekf.starting_at(start, scenario.robot, scenario.ekf)
    full: Final[Ekf] = Ekf.starting_at(start, scenario.robot, scenario.ekf)
    filters: Final[dict[Estimator, Ekf]] = {Estimator.EKF_LRF: lrf, Estimator.EKF_FULL: full}

    def measure(estimator: Ekf, features: list[ExtractedSegment], heading: float | None) -> MeasurementBundle:
        return build_measurement(
            features,
            global_map,
            estimator.state,
            heading,
            scenario.matching,
            noise,
            camera_var=scenario.ekf.camera_var,
            flip_margin=scenario.ekf.flip_margin,
        )

    rows: Final[list[RunRow]] = [_row(0, 0.0, truth, (start, start, start), 0)]
    skips: Final[list[SkipRecord]] = []
    max_asymmetry: float = 0.0
    min_eigenvalue: float = float("inf")
    for index, speeds in enumerate(scenario.iter_commands(), start=1):
        truth = step(truth, speeds, scenario.robot)
        measured: WheelSpeeds = encoder_readout(speeds, scenario.encoder_delta, streams.encoder)
        for estimator in (odometry, lrf, full):
            estimator.predict(measured)

        features: list[ExtractedSegment] = (
            extract_segments(raycast_scan(world, truth, scenario.sensor, streams.lrf), scenario.extraction)
            if scenario.schedule.scans_at(index)
            else []
        )
        heading: float | None = (
            heading_sensor(truth, scenario.sensor, streams.heading) if scenario.schedule.heading_at(index) else None
        )

        line_bundle: MeasurementBundle = measure(lrf, features, None)
        if not line_bundle.is_empty:
            lrf.correct(line_bundle)

        full_bundle: MeasurementBundle = measure(full, features, heading)
        if not full_bundle.is_empty:
            full.correct(full_bundle)

        for name, estimator in filters.items():
            covariance = estimator.state.covariance
            max_asymmetry = max(max_asymmetry, float(np.max(np.abs(covariance - covariance.T))))
            min_eigenvalue = min(min_eigenvalue, estimator.state.min_eigenvalue)
            if estimator.last_skip is not None:
                skips.append(SkipRecord(step=index, estimator=name, reason=estimator.last_skip))

        rows.append(
            _row(
                index,
                index * scenario.robot.sample_period,
                truth,
                (odometry.state.estimate, lrf.state.estimate, full.state.estimate),
                len(full_bundle.matched),
            )
        )

    log: Final[RunLog] = RunLog(
        seed=scenario.seed,
        rows=tuple(rows),
        skips=tuple(skips),
        max_asymmetry=max_asymmetry,
        min_eigenvalue=min_eigenvalue if rows[1:] else 0.0,
    )
    _TRACER.info(
        "scenario finished",
        seed=scenario.seed,
        steps=len(rows) - 1,
        skips=len(skips),
        err_odo=log.last.err_odo,
        err_lrf=log.last.err_lrf,
        err_full=log.last.err_full,
    )
    return log
