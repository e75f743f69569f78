"""Association of locally extracted segments with the mapped walls.

Mapped walls are moved into the robot frame of the odometry pose. A candidate pair must pass four gates: both
overlap rates, the squared ``rho`` difference and the squared wrapped ``psi`` difference. Passing candidates are then
taken greedily by ascending score so that every local and every mapped segment is used at most once.
"""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Annotated, Final, Protocol, Self, final

from pydantic import Field

from segekf.core.geometry import (
    NormalLine,
    Pose,
    Segment,
    line_to_robot_frame,
    segment_to_robot_frame,
    wrap_angle,
)
from segekf.tracing import Tracer
from segekf.utils import Entity

__all__: Final[tuple[str, ...]] = (
    "GlobalMap",
    "LineFeature",
    "MatchConfig",
    "MatchPair",
    "SegmentFeature",
    "match_segments",
    "overlap_rates",
)

_TRACER: Final[Tracer] = Tracer(__name__)


class LineFeature(Protocol):
    @property
    def endpoints(self: Self, /) -> Segment: ...

    @property
    def normal(self: Self, /) -> NormalLine: ...


@final
@dataclass(frozen=True, slots=True)
class SegmentFeature:
    """A local segment known only by its endpoints and normal form, e.g. read back from a report."""

    endpoints: Segment
    normal: NormalLine


@final
@dataclass(frozen=True, slots=True)
class GlobalMap:
    segments: tuple[Segment, ...]
    normals: tuple[NormalLine, ...] = field(init=False)

    def __post_init__(self: Self, /) -> None:
        object.__setattr__(self, "normals", tuple(segment.to_normal() for segment in self.segments))

    @classmethod
    def from_coordinates(cls: type[Self], /, walls: Iterable[Sequence[float]]) -> Self:
        return cls(tuple(Segment.from_coordinates(*map(float, wall)) for wall in walls))

    def __len__(self: Self, /) -> int:
        return len(self.segments)


@final
class MatchConfig(Entity):
    """Overlap gate in meters, ``rho`` gate in m^2, ``psi`` gate in rad^2."""

    overlap_threshold: Annotated[float, Field(gt=0.0)] = 0.3
    rho_threshold: Annotated[float, Field(gt=0.0)] = 0.01
    psi_threshold: Annotated[float, Field(gt=0.0)] = 0.0305


@final
@dataclass(frozen=True, slots=True)
class MatchPair:
    local_index: int
    global_index: int
    local_line: NormalLine
    global_line: NormalLine
    score: float
    rho_residual: float
    psi_residual: float
    overlap_1: float
    overlap_2: float


def overlap_rates(local: Segment, global_: Segment, /) -> tuple[float, float]:
    """How far each local endpoint is from lying on the mapped segment; zero means contained."""
    length: Final[float] = global_.length
    return (
        abs(local.p1.distance_to(global_.p1) + local.p1.distance_to(global_.p2) - length),
        abs(local.p2.distance_to(global_.p1) + local.p2.distance_to(global_.p2) - length),
    )


@_TRACER.with_span_sync(Tracer.DEBUG, "match_segments")
def match_segments(
    features: Sequence[LineFeature], global_map: GlobalMap, odom: Pose, config: MatchConfig, /
) -> list[MatchPair]:
    seen: Final[list[tuple[Segment, NormalLine]]] = [
        (segment_to_robot_frame(segment, odom), line_to_robot_frame(normal, odom))
        for segment, normal in zip(global_map.segments, global_map.normals, strict=True)
    ]

    candidates: Final[list[MatchPair]] = []
    for local_index, feature in enumerate(features):
        for global_index, (segment, line) in enumerate(seen):
            overlap_1, overlap_2 = overlap_rates(feature.endpoints, segment)
            if overlap_1 >= config.overlap_threshold or overlap_2 >= config.overlap_threshold:
                continue

            rho_residual: float = feature.normal.rho - line.rho
            psi_residual: float = wrap_angle(feature.normal.psi - line.psi)
            if rho_residual**2 >= config.rho_threshold or psi_residual**2 >= config.psi_threshold:
                continue

            candidates.append(
                MatchPair(
                    local_index=local_index,
                    global_index=global_index,
                    local_line=feature.normal,
                    global_line=global_map.normals[global_index],
                    score=rho_residual**2 / config.rho_threshold
                    + psi_residual**2 / config.psi_threshold
                    + (overlap_1 + overlap_2) / config.overlap_threshold,
                    rho_residual=rho_residual,
                    psi_residual=psi_residual,
                    overlap_1=overlap_1,
                    overlap_2=overlap_2,
                )
            )

    candidates.sort(key=lambda pair: (pair.score, pair.local_index, pair.global_index))
    used_local: Final[set[int]] = set()
    used_global: Final[set[int]] = set()
    pairs: Final[list[MatchPair]] = []
    for pair in candidates:
        if pair.local_index in used_local or pair.global_index in used_global:
            continue

        used_local.add(pair.local_index)
        used_global.add(pair.global_index)
        pairs.append(pair)

    pairs.sort(key=lambda pair: pair.local_index)
    _TRACER.trace("segments matched", candidates=len(candidates), pairs=len(pairs))
    return pairs
