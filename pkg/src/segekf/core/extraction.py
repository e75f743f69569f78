"""Line segments from a single range sweep.

A window of ``group_size`` consecutive points is fitted by least squares. The window is accepted when enough of its
points lie close to the fit, either within a fixed distance or within a per-window threshold picked from the sorted
distances. An accepted line is then grown forward while the points stay within that same distance, and the grown run is
refit with the ends that drift off the line, typically the start of the next wall, cut away.
"""

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum
from typing import Annotated, Final, Self, final

import numpy as np
from pydantic import Field, model_validator

from segekf.core.errors import DegenerateFitError
from segekf.core.geometry import (
    FloatArray,
    NormalLine,
    Point2,
    PolarPoint,
    Segment,
    SlopeIntercept,
    as_xy,
    slope_intercept_to_normal,
)
from segekf.tracing import Tracer
from segekf.utils import Entity

__all__: Final[tuple[str, ...]] = (
    "ExtractedSegment",
    "ExtractionConfig",
    "ExtractionMode",
    "Scan",
    "dynamic_threshold",
    "extract_segments",
    "fit_line_lsq",
    "fit_normal_line",
    "line_distances",
    "point_line_distance",
)

_TRACER: Final[Tracer] = Tracer(__name__)

# Below this the centered sum of squares cannot carry a slope.
_DEGENERATE_DENOMINATOR: Final[float] = 1e-12
# Distances between exact points and their line are only known to rounding.
_DISTANCE_RESOLUTION: Final[float] = 1e-9
# Ends of a grown run further than this many residual rms from its refit are cut.
_END_TRIM_RMS: Final[float] = 3.0


@final
class ExtractionMode(StrEnum):
    FIXED = enum.auto()
    DYNAMIC = enum.auto()


@final
class ExtractionConfig(Entity):
    """Distances in meters."""

    group_size: Annotated[int, Field(ge=3)] = 10
    inlier_ratio: Annotated[float, Field(gt=0.0, le=1.0)] = 0.75
    fixed_threshold: Annotated[float, Field(gt=0.0)] = 0.2
    max_threshold: Annotated[float, Field(gt=0.0)] = 0.4
    min_range: Annotated[float, Field(ge=0.0)] = 0.4
    neighbor_gap: Annotated[float, Field(gt=0.0)] = 0.5
    mode: ExtractionMode = ExtractionMode.FIXED

    @model_validator(mode="after")
    def _check_thresholds(self: Self, /) -> Self:
        if self.fixed_threshold > self.max_threshold:
            message: Final[str] = (
                f"fixed_threshold ({self.fixed_threshold}) must not exceed max_threshold ({self.max_threshold})."
            )
            raise ValueError(message)

        return self

    @property
    def inlier_count(self: Self, /) -> int:
        # Round half up, 0.75 * 10 is 8.
        return max(1, math.floor(self.inlier_ratio * self.group_size + 0.5))

    @property
    def max_misses(self: Self, /) -> int:
        return self.group_size - self.inlier_count


@final
@dataclass(frozen=True, slots=True)
class Scan:
    """Readings in ascending bearing, as swept from right to left."""

    points: tuple[PolarPoint, ...]
    timestamp: float | None = None

    def __post_init__(self: Self, /) -> None:
        bearings: Final[FloatArray] = np.array([point.phi for point in self.points], dtype=np.float64)
        if bearings.size > 1 and not bool(np.all(np.diff(bearings) > 0.0)):
            message: Final[str] = "Scan bearings must be strictly increasing."
            raise ValueError(message)

    @classmethod
    def from_ranges(
        cls: type[Self],
        /,
        ranges: Sequence[float] | FloatArray,
        *,
        fov: float = math.pi,
        max_range: float | None = None,
        timestamp: float | None = None,
    ) -> Self:
        """Evenly spaced bearings over ``fov`` centered on the heading; readings at ``max_range`` are invalid."""
        values: Final[FloatArray] = np.asarray(ranges, dtype=np.float64)
        bearings: Final[FloatArray] = (
            np.linspace(-0.5 * fov, 0.5 * fov, values.size) if values.size > 1 else np.zeros(values.size)
        )
        return cls(
            tuple(
                PolarPoint(float(r), float(phi), max_range is None or float(r) < max_range)
                for r, phi in zip(values, bearings, strict=True)
            ),
            timestamp,
        )

    def to_xy(self: Self, /, min_range: float = 0.0) -> FloatArray:
        """Cartesian points of the valid readings at or beyond ``min_range``, in sweep order."""
        kept: Final[list[PolarPoint]] = [point for point in self.points if point.valid and point.r >= min_range]
        r: Final[FloatArray] = np.array([point.r for point in kept], dtype=np.float64)
        phi: Final[FloatArray] = np.array([point.phi for point in kept], dtype=np.float64)
        return np.column_stack((r * np.cos(phi), r * np.sin(phi))).reshape(-1, 2)


@final
@dataclass(frozen=True, eq=False, slots=True)
class ExtractedSegment:
    endpoints: Segment
    fit: SlopeIntercept
    normal: NormalLine
    inliers: FloatArray
    threshold_used: float


def fit_line_lsq(points: Sequence[Point2] | FloatArray, /) -> SlopeIntercept:
    """Least-squares ``y = m*x + k``.

    Raises:
        DegenerateFitError: the points have no x-spread, e.g. a vertical wall.
    """
    xy: Final[FloatArray] = as_xy(points)
    return _fit(xy[:, 0], xy[:, 1], swapped=False)


def _fit(u: FloatArray, w: FloatArray, *, swapped: bool) -> SlopeIntercept:
    count: Final[int] = u.size
    if count < 2:  # noqa: PLR2004
        raise DegenerateFitError(count, 0.0)

    u_mean: Final[float] = float(u.mean())
    w_mean: Final[float] = float(w.mean())
    # Centered form of (sum(uw) - sum(u)sum(w)/n) / (sum(u^2) - sum(u)^2/n).
    denominator: Final[float] = float(np.sum((u - u_mean) ** 2))
    if abs(denominator) < _DEGENERATE_DENOMINATOR:
        raise DegenerateFitError(count, denominator)

    m: Final[float] = float(np.sum((u - u_mean) * (w - w_mean))) / denominator
    return SlopeIntercept(m, w_mean - m * u_mean, swapped)


def fit_normal_line(points: Sequence[Point2] | FloatArray, /) -> tuple[SlopeIntercept, NormalLine]:
    """Fit in whichever axis order suits the point spread and return the fit with its normal form."""
    xy: Final[FloatArray] = as_xy(points)
    x_spread: Final[float] = float(np.std(xy[:, 0])) if len(xy) > 0 else 0.0
    y_spread: Final[float] = float(np.std(xy[:, 1])) if len(xy) > 0 else 0.0

    fit: SlopeIntercept
    if x_spread < 2.0 * y_spread:
        fit = _fit(xy[:, 1], xy[:, 0], swapped=True)

    else:
        try:
            fit = _fit(xy[:, 0], xy[:, 1], swapped=False)

        except DegenerateFitError:
            fit = _fit(xy[:, 1], xy[:, 0], swapped=True)

    return fit, slope_intercept_to_normal(fit)


def point_line_distance(point: Point2, line: SlopeIntercept, /) -> float:
    if line.swapped:
        return abs(line.m * point.y - point.x + line.k) / math.sqrt(line.m * line.m + 1.0)

    return abs(line.m * point.x - point.y + line.k) / math.sqrt(line.m * line.m + 1.0)


def line_distances(points: FloatArray, line: SlopeIntercept, /) -> FloatArray:
    """Vectorized :func:`point_line_distance` over an ``(n, 2)`` array."""
    u, w = (points[:, 1], points[:, 0]) if line.swapped else (points[:, 0], points[:, 1])
    return np.abs(line.m * u - w + line.k) / math.sqrt(line.m * line.m + 1.0)


def dynamic_threshold(
    distances: Sequence[float] | FloatArray, inlier_count: int, max_threshold: float, /
) -> float | None:
    """The ``inlier_count``-th smallest distance, or ``None`` when it exceeds ``max_threshold``."""
    values: Final[FloatArray] = np.sort(np.asarray(distances, dtype=np.float64))
    if inlier_count < 1 or values.size < inlier_count:
        message: Final[str] = f"Need at least {inlier_count} distances (and at least one), got {values.size}."
        raise ValueError(message)

    threshold: Final[float] = float(values[inlier_count - 1])
    return threshold if threshold <= max_threshold else None


@_TRACER.with_span_sync(Tracer.DEBUG, "extract_segments")
def extract_segments(scan: Scan, config: ExtractionConfig, /) -> list[ExtractedSegment]:
    points: Final[FloatArray] = scan.to_xy(config.min_range)
    segments: Final[list[ExtractedSegment]] = []

    start: int = 0
    while start + config.group_size <= len(points):
        window: FloatArray = points[start : start + config.group_size]
        try:
            window_fit, _ = fit_normal_line(window)

        except DegenerateFitError:
            start += 1
            continue

        distances: FloatArray = line_distances(window, window_fit)
        threshold: float | None = _accept(distances, config)
        if threshold is None:
            start += 1
            continue

        inliers: FloatArray = start + np.flatnonzero(distances <= threshold)
        segment, last_index = _grow(points, inliers, window_fit, threshold, config)
        segments.append(segment)
        start = last_index + 1

    _TRACER.debug("segments extracted", mode=config.mode.value, points=len(points), segments=len(segments))
    return segments


def _accept(distances: FloatArray, config: ExtractionConfig) -> float | None:
    if config.mode is ExtractionMode.DYNAMIC:
        return dynamic_threshold(distances, config.inlier_count, config.max_threshold)

    if int(np.count_nonzero(distances <= config.fixed_threshold)) >= config.inlier_count:
        return config.fixed_threshold

    return None


def _grow(
    points: FloatArray, inliers: FloatArray, window_fit: SlopeIntercept, threshold: float, config: ExtractionConfig
) -> tuple[ExtractedSegment, int]:
    try:
        inlier_fit, _ = fit_normal_line(points[inliers])

    except DegenerateFitError:
        inlier_fit = window_fit

    limit: Final[float] = max(threshold, _DISTANCE_RESOLUTION)
    to_line: Final[FloatArray] = line_distances(points, inlier_fit)

    accepted: Final[list[int]] = [int(inliers[0])]
    misses: int = 0
    for index in range(accepted[0] + 1, len(points)):
        previous: FloatArray = points[accepted[-1]]
        if math.hypot(points[index, 0] - previous[0], points[index, 1] - previous[1]) > config.neighbor_gap:
            break

        if to_line[index] > limit:
            misses += 1
            if misses > config.max_misses:
                break

            continue

        accepted.append(index)
        misses = 0

    grown: Final[FloatArray] = np.array(accepted)
    trimmed: Final[tuple[SlopeIntercept, FloatArray] | None] = _trim_ends(points, grown, limit, config.inlier_count)
    if trimmed is not None:
        fit, members = trimmed
        return _build(points[members], fit, limit), accepted[-1]

    for fit in (inlier_fit, window_fit):
        members = grown[line_distances(points[grown], fit) <= limit]
        if len(members) >= config.inlier_count:
            return _build(points[members], fit, limit), accepted[-1]

    return _build(points[inliers], window_fit, limit), max(accepted[-1], int(inliers[-1]))


def _trim_ends(
    points: FloatArray, run: FloatArray, limit: float, minimum: int
) -> tuple[SlopeIntercept, FloatArray] | None:
    """Refit the grown run and cut off ends that drift away from the line, such as the first points of the next wall.

    Returns the final fit with the run's points within ``limit`` of it, or ``None`` when fewer than ``minimum`` remain.
    """
    while len(run) >= minimum:
        try:
            fit, _ = fit_normal_line(points[run])

        except DegenerateFitError:
            return None

        distances: FloatArray = line_distances(points[run], fit)
        rms: float = math.sqrt(float(np.mean(distances**2)))
        close: FloatArray = np.flatnonzero(distances <= min(limit, max(_END_TRIM_RMS * rms, _DISTANCE_RESOLUTION)))
        if close.size == 0:
            return None

        if close[0] == 0 and close[-1] == len(run) - 1:
            members: FloatArray = run[distances <= limit]
            return (fit, members) if len(members) >= minimum else None

        run = run[close[0] : close[-1] + 1]

    return None


def _build(members: FloatArray, fit: SlopeIntercept, threshold: float) -> ExtractedSegment:
    return ExtractedSegment(
        endpoints=Segment.from_coordinates(
            float(members[0, 0]), float(members[0, 1]), float(members[-1, 0]), float(members[-1, 1])
        ),
        fit=fit,
        normal=slope_intercept_to_normal(fit),
        inliers=members,
        threshold_used=threshold,
    )
