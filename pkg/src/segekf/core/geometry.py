"""Frames, angles and line representations.

Everything is SI: meters and radians. A :class:`NormalLine` is kept canonical (``rho >= 0``, ``psi`` in
``(-pi, pi]``) so that matching and innovations compare like with like.
"""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Final, Self, final

import numpy as np
import numpy.typing as npt

__all__: Final[tuple[str, ...]] = (
    "FloatArray",
    "Point2",
    "PolarPoint",
    "Pose",
    "Segment",
    "NormalLine",
    "SlopeIntercept",
    "as_xy",
    "line_to_robot_frame",
    "normal_from_swapped",
    "points_to_robot_frame",
    "polar_to_cartesian",
    "segment_to_global_frame",
    "segment_to_robot_frame",
    "slope_intercept_to_normal",
    "wrap_angle",
)

type FloatArray = npt.NDArray[np.float64]

TAU: Final[float] = 2.0 * math.pi


def wrap_angle(angle: float, /) -> float:
    """Map ``angle`` into ``(-pi, pi]``."""
    wrapped: Final[float] = math.fmod(angle, TAU)
    if wrapped <= -math.pi:
        return wrapped + TAU

    if wrapped > math.pi:
        return wrapped - TAU

    return wrapped


@final
@dataclass(frozen=True, slots=True)
class Point2:
    x: float
    y: float

    def distance_to(self: Self, other: "Point2", /) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@final
@dataclass(frozen=True, slots=True)
class PolarPoint:
    """Range reading; ``valid`` is cleared for capped (no-return) beams."""

    r: float
    phi: float
    valid: bool = True


@final
@dataclass(frozen=True, slots=True)
class Pose:
    x: float
    y: float
    theta: float

    def __post_init__(self: Self, /) -> None:
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @classmethod
    def from_array(cls: type[Self], /, state: Sequence[float] | FloatArray) -> Self:
        return cls(float(state[0]), float(state[1]), float(state[2]))

    def to_array(self: Self, /) -> FloatArray:
        return np.array((self.x, self.y, self.theta), dtype=np.float64)

    def distance_to(self: Self, other: "Pose", /) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@final
@dataclass(frozen=True, slots=True)
class Segment:
    p1: Point2
    p2: Point2

    def __post_init__(self: Self, /) -> None:
        if self.p1 == self.p2:
            message: Final[str] = f"Segment endpoints coincide at ({self.p1.x}, {self.p1.y})."
            raise ValueError(message)

    @classmethod
    def from_coordinates(cls: type[Self], /, x1: float, y1: float, x2: float, y2: float) -> Self:
        return cls(Point2(x1, y1), Point2(x2, y2))

    @property
    def length(self: Self, /) -> float:
        return self.p1.distance_to(self.p2)

    def to_coordinates(self: Self, /) -> tuple[float, float, float, float]:
        return self.p1.x, self.p1.y, self.p2.x, self.p2.y

    def to_normal(self: Self, /) -> "NormalLine":
        """Normal form of the infinite line through both endpoints."""
        dx: Final[float] = self.p2.x - self.p1.x
        dy: Final[float] = self.p2.y - self.p1.y
        psi: Final[float] = math.atan2(dx, -dy)
        return NormalLine.canonical(self.p1.x * math.cos(psi) + self.p1.y * math.sin(psi), psi)


@final
@dataclass(frozen=True, slots=True)
class NormalLine:
    """Line ``x*cos(psi) + y*sin(psi) = rho``."""

    rho: float
    psi: float

    @classmethod
    def canonical(cls: type[Self], /, signed_rho: float, psi: float) -> Self:
        if signed_rho >= 0.0:
            return cls(signed_rho, wrap_angle(psi))

        return cls(-signed_rho, wrap_angle(psi + math.pi))

    def signed_distance(self: Self, /, x: float, y: float) -> float:
        return self.rho - x * math.cos(self.psi) - y * math.sin(self.psi)


@final
@dataclass(frozen=True, slots=True)
class SlopeIntercept:
    """``y = m*x + k``, or ``x = m*y + k`` when ``swapped`` (near-vertical lines)."""

    m: float
    k: float
    swapped: bool = False


def as_xy(points: Iterable[Point2] | FloatArray, /) -> FloatArray:
    """Stack points into an ``(n, 2)`` float array."""
    if isinstance(points, np.ndarray):
        return np.asarray(points, dtype=np.float64).reshape(-1, 2)

    return np.array([(point.x, point.y) for point in points], dtype=np.float64).reshape(-1, 2)


def polar_to_cartesian(point: PolarPoint, /) -> Point2:
    return Point2(point.r * math.cos(point.phi), point.r * math.sin(point.phi))


def slope_intercept_to_normal(line: SlopeIntercept, /) -> NormalLine:
    """Normal form via the foot of the perpendicular dropped from the origin.

    A line through the origin has no foot direction; its ``psi`` is the normal direction ``atan2(1, -m)``.
    """
    if line.swapped:
        return normal_from_swapped(line.m, line.k)

    scale: Final[float] = 1.0 + line.m * line.m
    if line.k == 0.0:
        return NormalLine(0.0, wrap_angle(math.atan2(1.0, -line.m)))

    psi: Final[float] = math.atan2(line.k / scale, -line.m * line.k / scale)
    return NormalLine(abs(line.k) / math.sqrt(scale), wrap_angle(psi))


def normal_from_swapped(m: float, k: float, /) -> NormalLine:
    """Normal form of ``x = m*y + k``; the foot of the perpendicular is ``(k, -m*k) / (1 + m^2)``."""
    scale: Final[float] = 1.0 + m * m
    if k == 0.0:
        return NormalLine(0.0, wrap_angle(math.atan2(-m, 1.0)))

    return NormalLine(abs(k) / math.sqrt(scale), wrap_angle(math.atan2(-m * k / scale, k / scale)))


def points_to_robot_frame(points: FloatArray, odom: Pose, /) -> FloatArray:
    """Rotate by ``-theta`` after removing the robot position (world to robot frame)."""
    cos_theta: Final[float] = math.cos(odom.theta)
    sin_theta: Final[float] = math.sin(odom.theta)
    shifted: Final[FloatArray] = points - np.array((odom.x, odom.y))
    return np.column_stack(
        (cos_theta * shifted[:, 0] + sin_theta * shifted[:, 1], -sin_theta * shifted[:, 0] + cos_theta * shifted[:, 1])
    )


def segment_to_robot_frame(segment: Segment, odom: Pose, /) -> Segment:
    local: Final[FloatArray] = points_to_robot_frame(
        np.array(((segment.p1.x, segment.p1.y), (segment.p2.x, segment.p2.y))), odom
    )
    return Segment.from_coordinates(local[0, 0], local[0, 1], local[1, 0], local[1, 1])


def segment_to_global_frame(segment: Segment, odom: Pose, /) -> Segment:
    """Inverse of :func:`segment_to_robot_frame`."""
    cos_theta: Final[float] = math.cos(odom.theta)
    sin_theta: Final[float] = math.sin(odom.theta)

    def lift(point: Point2) -> Point2:
        return Point2(
            odom.x + cos_theta * point.x - sin_theta * point.y, odom.y + sin_theta * point.x + cos_theta * point.y
        )

    return Segment(lift(segment.p1), lift(segment.p2))


def line_to_robot_frame(line: NormalLine, odom: Pose, /) -> NormalLine:
    return NormalLine.canonical(line.signed_distance(odom.x, odom.y), line.psi - odom.theta)
