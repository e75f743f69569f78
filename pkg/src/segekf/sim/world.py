"""Wall worlds and the simulated sensors that look at them.

Every sensor draws from its own ``numpy`` stream so that adding draws to one sensor never shifts another.
"""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Annotated, Final, Self, final

import numpy as np
from numpy.random import PCG64, Generator, SeedSequence
from pydantic import Field, model_validator

from segekf.core.extraction import Scan
from segekf.core.geometry import FloatArray, PolarPoint, Pose, Segment, wrap_angle
from segekf.core.kinematics import WheelSpeeds
from segekf.core.matching import GlobalMap
from segekf.utils import Entity

__all__: Final[tuple[str, ...]] = (
    "SensorConfig",
    "SensorStreams",
    "World",
    "encoder_readout",
    "heading_sensor",
    "raycast_scan",
)

# Rays closer to parallel than this never hit the wall.
_PARALLEL: Final[float] = 1e-12
# Smallest reported range; noise never pushes a reading to or below zero.
_MIN_READING: Final[float] = 1e-6


@final
@dataclass(frozen=True, slots=True)
class World:
    walls: tuple[Segment, ...]

    def __post_init__(self: Self, /) -> None:
        if len(self.walls) == 0:
            message: Final[str] = "A world needs at least one wall."
            raise ValueError(message)

    @classmethod
    def from_coordinates(cls: type[Self], /, walls: Iterable[Sequence[float]]) -> Self:
        return cls(tuple(Segment.from_coordinates(*map(float, wall)) for wall in walls))

    @classmethod
    def rectangle(cls: type[Self], /, width: float, height: float, *, x: float = 0.0, y: float = 0.0) -> Self:
        """Closed room with its lower-left corner at ``(x, y)``, walls listed counter-clockwise."""
        corners: Final[list[tuple[float, float]]] = [(x, y), (x + width, y), (x + width, y + height), (x, y + height)]
        return cls(
            tuple(
                Segment.from_coordinates(*corners[index], *corners[(index + 1) % len(corners)])
                for index in range(len(corners))
            )
        )

    def to_map(self: Self, /) -> GlobalMap:
        return GlobalMap(self.walls)

    def to_array(self: Self, /) -> FloatArray:
        """Walls as an ``(n, 4)`` array of ``x1, y1, x2, y2``."""
        return np.array([wall.to_coordinates() for wall in self.walls], dtype=np.float64)


@final
class SensorConfig(Entity):
    """Range finder and heading sensor; angles in radians, ranges in meters."""

    fov: Annotated[float, Field(gt=0.0, le=2.0 * math.pi)] = math.pi
    angular_step: Annotated[float, Field(gt=0.0)] = math.radians(0.5)
    max_range: Annotated[float, Field(gt=0.0)] = 8.0
    range_noise_sigma: Annotated[float, Field(ge=0.0)] = 0.005
    heading_var: Annotated[float, Field(ge=0.0)] = 0.0265

    @model_validator(mode="after")
    def _check_beams(self: Self, /) -> Self:
        ratio: Final[float] = self.fov / self.angular_step
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            message: Final[str] = f"fov ({self.fov}) is not a whole number of angular steps ({self.angular_step})."
            raise ValueError(message)

        return self

    @property
    def beam_count(self: Self, /) -> int:
        """Both edges of the field of view carry a beam."""
        return round(self.fov / self.angular_step) + 1

    def bearings(self: Self, /) -> FloatArray:
        return np.linspace(-0.5 * self.fov, 0.5 * self.fov, self.beam_count)


@final
@dataclass(frozen=True, slots=True)
class SensorStreams:
    encoder: Generator
    lrf: Generator
    heading: Generator
    spare: Generator

    @classmethod
    def from_seed(cls: type[Self], /, seed: int) -> Self:
        children: Final[list[SeedSequence]] = SeedSequence(seed).spawn(4)
        return cls(*(Generator(PCG64(child)) for child in children))


def _first_hits(world: World, pose: Pose, bearings: FloatArray) -> FloatArray:
    """Distance along every ray to the nearest wall, ``inf`` when nothing is hit."""
    angles: Final[FloatArray] = pose.theta + bearings
    directions: Final[FloatArray] = np.column_stack((np.cos(angles), np.sin(angles)))
    walls: Final[FloatArray] = world.to_array()
    starts: Final[FloatArray] = walls[:, 0:2]
    spans: Final[FloatArray] = walls[:, 2:4] - starts
    offsets: Final[FloatArray] = starts - np.array((pose.x, pose.y))

    # Rays along axis 0, walls along axis 1.
    dx, dy = directions[:, 0], directions[:, 1]
    denominator: Final[FloatArray] = np.outer(dx, spans[:, 1]) - np.outer(dy, spans[:, 0])
    along_ray: Final[FloatArray] = offsets[:, 0] * spans[:, 1] - offsets[:, 1] * spans[:, 0]
    along_wall: Final[FloatArray] = np.outer(dy, offsets[:, 0]) - np.outer(dx, offsets[:, 1])

    hits: Final[FloatArray] = np.full(denominator.shape, np.inf)
    usable: Final[FloatArray] = np.abs(denominator) > _PARALLEL
    with np.errstate(divide="ignore", invalid="ignore"):
        t: Final[FloatArray] = np.where(usable, along_ray[np.newaxis, :] / denominator, np.inf)
        s: Final[FloatArray] = np.where(usable, along_wall / denominator, -1.0)

    valid: Final[FloatArray] = usable & (t > 0.0) & (s >= 0.0) & (s <= 1.0)
    hits[valid] = t[valid]
    return hits.min(axis=1)


def raycast_scan(world: World, pose: Pose, config: SensorConfig, rng: Generator, /) -> Scan:
    """One sweep from ``pose``; beams that reach ``max_range`` are reported at the cap and flagged invalid."""
    bearings: Final[FloatArray] = config.bearings()
    truth: Final[FloatArray] = _first_hits(world, pose, bearings)
    returned: Final[FloatArray] = truth < config.max_range
    noise: Final[FloatArray] = (
        rng.normal(0.0, config.range_noise_sigma, bearings.size)
        if config.range_noise_sigma > 0.0
        else np.zeros(bearings.size)
    )
    ranges: Final[FloatArray] = np.where(
        returned, np.clip(truth + noise, _MIN_READING, config.max_range), config.max_range
    )
    return Scan(
        tuple(
            PolarPoint(float(r), float(phi), bool(hit)) for r, phi, hit in zip(ranges, bearings, returned, strict=True)
        )
    )


def heading_sensor(pose: Pose, config: SensorConfig, rng: Generator, /) -> float:
    if config.heading_var == 0.0:
        return pose.theta

    return wrap_angle(pose.theta + float(rng.normal(0.0, math.sqrt(config.heading_var))))


def encoder_readout(speeds: WheelSpeeds, delta: float, rng: Generator, /) -> WheelSpeeds:
    """Each wheel speed gets independent noise of variance ``delta * omega^2``."""
    if delta < 0.0:
        message: Final[str] = f"Encoder noise factor must be non-negative, got {delta}."
        raise ValueError(message)

    scale: Final[FloatArray] = np.sqrt(delta) * np.abs(np.array((speeds.omega_l, speeds.omega_r)))
    noise: Final[FloatArray] = rng.normal(0.0, 1.0, 2) * scale
    return WheelSpeeds(speeds.omega_l + float(noise[0]), speeds.omega_r + float(noise[1]))
