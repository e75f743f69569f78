"""Extended Kalman filter over the pose ``(x, y, theta)``.

The measurement vector stacks ``(rho, psi)`` of every matched line in the robot frame, followed by the absolute
heading when one is available. Angle components of the innovation are wrapped before they reach the gain.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Annotated, ClassVar, Final, Self, final

import numpy as np
from pydantic import Field

from segekf.core.errors import DegenerateGeometryError, SingularInnovationError
from segekf.core.extraction import ExtractedSegment
from segekf.core.geometry import FloatArray, Pose, line_to_robot_frame, wrap_angle
from segekf.core.kinematics import (
    RobotParams,
    WheelSpeeds,
    input_noise_cov,
    jacobian_noise,
    jacobian_state,
    step,
)
from segekf.core.matching import GlobalMap, MatchConfig, MatchPair, match_segments
from segekf.core.uncertainty import LineCovariance, PointNoise, assemble_R, line_covariance
from segekf.tracing import Tracer
from segekf.utils import Entity

__all__: Final[tuple[str, ...]] = (
    "Ekf",
    "EkfConfig",
    "EkfState",
    "MeasurementBundle",
    "build_measurement",
    "correct",
    "innovation",
    "measurement_model",
    "nees",
    "predict",
)

_TRACER: Final[Tracer] = Tracer(__name__)


@final
class EkfConfig(Entity):
    """Filter tuning.

    ``point_sigma`` is the per-point Cartesian deviation fed to the line covariance; ``None`` means the range noise of
    the sensor. ``initial_cov`` is the diagonal of the starting covariance in m^2, m^2 and rad^2.
    """

    delta: Annotated[float, Field(ge=0.0)] = 0.01
    camera_var: Annotated[float, Field(gt=0.0)] = 0.0265
    initial_cov: tuple[
        Annotated[float, Field(ge=0.0)], Annotated[float, Field(ge=0.0)], Annotated[float, Field(ge=0.0)]
    ] = (0.01, 0.01, 0.0076)
    point_sigma: Annotated[float | None, Field(ge=0.0)] = None
    flip_margin: Annotated[float, Field(ge=0.0)] = 1e-3
    max_condition: Annotated[float, Field(gt=1.0)] = 1e12


@final
@dataclass(frozen=True, eq=False, slots=True)
class EkfState:
    estimate: Pose
    covariance: FloatArray

    def __post_init__(self: Self, /) -> None:
        if self.covariance.shape != (3, 3):
            message: Final[str] = f"State covariance must be 3x3, got {self.covariance.shape}."
            raise ValueError(message)

    @classmethod
    def initial(cls: type[Self], /, estimate: Pose, diagonal: Sequence[float]) -> Self:
        return cls(estimate, np.diag(np.asarray(diagonal, dtype=np.float64)))

    @property
    def min_eigenvalue(self: Self, /) -> float:
        return float(np.min(np.linalg.eigvalsh(self.covariance)))


@final
@dataclass(frozen=True, eq=False, slots=True)
class MeasurementBundle:
    """``z`` is ``[rho_1, psi_1, ..., rho_n, psi_n, heading]``; ``heading`` is ``None`` for line-only bundles."""

    z: FloatArray
    matched: tuple[MatchPair, ...]
    heading: float | None
    covariance: FloatArray

    def __post_init__(self: Self, /) -> None:
        size: Final[int] = 2 * len(self.matched) + (1 if self.heading is not None else 0)
        if self.z.shape != (size,) or self.covariance.shape != (size, size):
            message: Final[str] = (
                f"Bundle of {len(self.matched)} lines expects {size} rows, "
                f"got z {self.z.shape} and covariance {self.covariance.shape}."
            )
            raise ValueError(message)

    @property
    def is_empty(self: Self, /) -> bool:
        return self.z.size == 0

    def without_heading(self: Self, /) -> "MeasurementBundle":
        if self.heading is None:
            return self

        return MeasurementBundle(self.z[:-1], self.matched, None, self.covariance[:-1, :-1])


def _symmetrized(matrix: FloatArray) -> FloatArray:
    return 0.5 * (matrix + matrix.T)


def predict(state: EkfState, speeds: WheelSpeeds, params: RobotParams, delta: float, /) -> EkfState:
    # Jacobians at the estimate entering the step.
    a: Final[FloatArray] = jacobian_state(state.estimate, speeds, params)
    w: Final[FloatArray] = jacobian_noise(state.estimate, params)
    q: Final[FloatArray] = input_noise_cov(speeds, delta)
    return EkfState(
        step(state.estimate, speeds, params), _symmetrized(a @ state.covariance @ a.T + w @ q @ w.T)
    )


def build_measurement(
    features: Sequence[ExtractedSegment],
    global_map: GlobalMap,
    predicted: EkfState,
    heading: float | None,
    config: MatchConfig,
    noise: PointNoise,
    /,
    *,
    camera_var: float = 0.0265,
    flip_margin: float = 1e-3,
) -> MeasurementBundle:
    """Match, drop lines passing within ``flip_margin`` of the robot, and stack the measurement."""
    used: Final[list[MatchPair]] = []
    covariances: Final[list[LineCovariance]] = []
    for pair in match_segments(features, global_map, predicted.estimate, config):
        distance: float = pair.global_line.signed_distance(predicted.estimate.x, predicted.estimate.y)
        if abs(distance) < flip_margin:
            _TRACER.debug("line dropped near the robot", global_index=pair.global_index, distance=distance)
            continue

        try:
            covariances.append(line_covariance(features[pair.local_index].inliers, pair.local_line, noise))

        except DegenerateGeometryError as exception:
            _TRACER.debug("line dropped without covariance", global_index=pair.global_index, exception_=exception)
            continue

        used.append(pair)

    rows: Final[list[float]] = [value for pair in used for value in (pair.local_line.rho, pair.local_line.psi)]
    if heading is not None:
        rows.append(heading)

    return MeasurementBundle(
        z=np.array(rows, dtype=np.float64),
        matched=tuple(used),
        heading=heading,
        covariance=assemble_R(covariances, camera_var if heading is not None else None),
    )


def measurement_model(
    pose: Pose, matched: Sequence[MatchPair], /, *, with_heading: bool = True
) -> tuple[FloatArray, FloatArray]:
    """Predicted measurement ``h`` and its Jacobian ``H`` with respect to ``(x, y, theta)``."""
    size: Final[int] = 2 * len(matched) + (1 if with_heading else 0)
    h: Final[FloatArray] = np.zeros(size)
    jacobian: Final[FloatArray] = np.zeros((size, 3))
    for index, pair in enumerate(matched):
        line = pair.global_line
        seen = line_to_robot_frame(line, pose)
        # The robot-frame line flips to keep rho non-negative once the robot crosses it.
        sign: float = 1.0 if line.signed_distance(pose.x, pose.y) >= 0.0 else -1.0
        h[2 * index] = seen.rho
        h[2 * index + 1] = seen.psi
        jacobian[2 * index] = (-sign * math.cos(line.psi), -sign * math.sin(line.psi), 0.0)
        jacobian[2 * index + 1] = (0.0, 0.0, -1.0)

    if with_heading:
        h[-1] = pose.theta
        jacobian[-1] = (0.0, 0.0, 1.0)

    return h, jacobian


def innovation(z: FloatArray, h: FloatArray, /, *, with_heading: bool) -> FloatArray:
    nu: Final[FloatArray] = z - h
    angles: Final[list[int]] = list(range(1, 2 * ((z.size - (1 if with_heading else 0)) // 2), 2))
    if with_heading:
        angles.append(z.size - 1)

    for index in angles:
        nu[index] = wrap_angle(float(nu[index]))

    return nu


def correct(predicted: EkfState, bundle: MeasurementBundle, /, *, max_condition: float = 1e12) -> EkfState:
    """Kalman update; the covariance update is ``(I - KH) P`` followed by symmetrization.

    Raises:
        SingularInnovationError: the innovation covariance is numerically singular.
    """
    if bundle.is_empty:
        return predicted

    with_heading: Final[bool] = bundle.heading is not None
    h, jacobian = measurement_model(predicted.estimate, bundle.matched, with_heading=with_heading)
    p: Final[FloatArray] = predicted.covariance
    s: Final[FloatArray] = jacobian @ p @ jacobian.T + bundle.covariance
    condition: Final[float] = float(np.linalg.cond(s))
    if not math.isfinite(condition) or condition > max_condition:
        raise SingularInnovationError(condition)

    gain: Final[FloatArray] = np.linalg.solve(s, jacobian @ p).T
    nu: Final[FloatArray] = innovation(bundle.z, h, with_heading=with_heading)
    return EkfState(
        Pose.from_array(predicted.estimate.to_array() + gain @ nu), _symmetrized((np.eye(3) - gain @ jacobian) @ p)
    )


def nees(truth: Pose, state: EkfState, /) -> float:
    """Normalized estimation error squared, heading error wrapped."""
    error: Final[FloatArray] = np.array(
        (
            truth.x - state.estimate.x,
            truth.y - state.estimate.y,
            wrap_angle(truth.theta - state.estimate.theta),
        )
    )
    return float(error @ np.linalg.solve(state.covariance, error))


@final
class Ekf:
    """A running filter: the current state plus the reason the last correction was skipped, if it was."""

    __slots__: ClassVar[tuple[str, ...]] = ("config", "last_skip", "params", "state")

    def __init__(self: Self, /, state: EkfState, params: RobotParams, config: EkfConfig) -> None:
        self.state: EkfState = state
        self.params: Final[RobotParams] = params
        self.config: Final[EkfConfig] = config
        self.last_skip: str | None = None

    @classmethod
    def starting_at(cls: type[Self], /, pose: Pose, params: RobotParams, config: EkfConfig) -> Self:
        return cls(EkfState.initial(pose, config.initial_cov), params, config)

    def predict(self: Self, /, speeds: WheelSpeeds) -> EkfState:
        self.last_skip = None
        self.state = predict(self.state, speeds, self.params, self.config.delta)
        return self.state

    def correct(self: Self, /, bundle: MeasurementBundle) -> EkfState:
        """Apply ``bundle``; a singular innovation leaves the prediction in place and records why."""
        self.last_skip = None
        try:
            self.state = correct(self.state, bundle, max_condition=self.config.max_condition)

        except SingularInnovationError as exception:
            self.last_skip = str(exception)
            _TRACER.warning("correction skipped", reason=self.last_skip, lines=len(bundle.matched))

        return self.state

    def step(self: Self, /, speeds: WheelSpeeds, bundle: MeasurementBundle | None) -> EkfState:
        self.predict(speeds)
        if bundle is not None:
            self.correct(bundle)

        return self.state
