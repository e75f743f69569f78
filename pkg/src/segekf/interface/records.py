"""CSV reports.

Every report is a sequence of one :class:`~segekf.utils.Entity` type; the header is the model's field list, floats are
written with ``repr`` so that reading a report back restores the exact values.
"""

import csv
from collections.abc import Iterable
from pathlib import Path
from typing import Annotated, Any, Final, Self, final

from pydantic import Field, ValidationError

from segekf.core.errors import DocumentError
from segekf.core.extraction import ExtractedSegment
from segekf.core.geometry import NormalLine, Segment
from segekf.core.matching import MatchPair, SegmentFeature
from segekf.sim.scenario import RunLog, RunRow
from segekf.utils import Entity

__all__: Final[tuple[str, ...]] = (
    "DeviationRow",
    "PairRow",
    "SegmentRow",
    "TimingRow",
    "read_records",
    "write_records",
)


@final
class DeviationRow(Entity):
    step: int
    t: float
    err_odo: float
    err_lrf: float
    err_full: float

    @classmethod
    def from_run_row(cls: type[Self], /, row: RunRow) -> Self:
        return cls(step=row.step, t=row.t, err_odo=row.err_odo, err_lrf=row.err_lrf, err_full=row.err_full)

    @classmethod
    def from_run_log(cls: type[Self], /, log: RunLog) -> list[Self]:
        return [cls.from_run_row(row) for row in log.rows]


@final
class SegmentRow(Entity):
    scan: Annotated[int, Field(ge=0)]
    index: Annotated[int, Field(ge=0)]
    x1: float
    y1: float
    x2: float
    y2: float
    m: float
    k: float
    swapped: bool
    rho: float
    psi: float
    threshold_used: float
    inliers: Annotated[int, Field(ge=0)]

    @classmethod
    def from_segment(cls: type[Self], /, scan: int, index: int, segment: ExtractedSegment) -> Self:
        x1, y1, x2, y2 = segment.endpoints.to_coordinates()
        return cls(
            scan=scan,
            index=index,
            x1=x1,
            y1=y1,
            x2=x2,
            y2=y2,
            m=segment.fit.m,
            k=segment.fit.k,
            swapped=segment.fit.swapped,
            rho=segment.normal.rho,
            psi=segment.normal.psi,
            threshold_used=segment.threshold_used,
            inliers=len(segment.inliers),
        )

    def to_feature(self: Self, /) -> SegmentFeature:
        return SegmentFeature(
            Segment.from_coordinates(self.x1, self.y1, self.x2, self.y2), NormalLine(self.rho, self.psi)
        )


@final
class PairRow(Entity):
    local_index: int
    global_index: int
    rho_residual: float
    psi_residual: float
    overlap_1: float
    overlap_2: float
    score: float

    @classmethod
    def from_pair(cls: type[Self], /, pair: MatchPair) -> Self:
        return cls(
            local_index=pair.local_index,
            global_index=pair.global_index,
            rho_residual=pair.rho_residual,
            psi_residual=pair.psi_residual,
            overlap_1=pair.overlap_1,
            overlap_2=pair.overlap_2,
            score=pair.score,
        )


@final
class TimingRow(Entity):
    scan: int
    seconds: float


def write_records(path: Path, model: type[Entity], rows: Iterable[Entity], /) -> None:
    header: Final[list[str]] = list(model.model_fields)
    with path.open("w", newline="", encoding="utf-8") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            # StrEnum members render as their value, floats as their shortest round-tripping repr.
            writer.writerow([getattr(row, name) for name in header])


def read_records[M: Entity](path: Path, model: type[M], /) -> list[M]:
    """Read a report written by :func:`write_records`.

    Raises:
        DocumentError: missing file, unexpected header or a row that does not validate.
    """
    expected: Final[list[str]] = list(model.model_fields)
    try:
        file = path.open(newline="", encoding="utf-8")

    except FileNotFoundError as exception:
        raise DocumentError(path, "file not found") from exception

    with file:
        reader = csv.reader(file)
        header: Final[list[str] | None] = next(reader, None)
        if header != expected:
            raise DocumentError(path, f"expected header {','.join(expected)}", line=1)

        rows: Final[list[M]] = []
        for values in reader:
            row: dict[str, Any] = dict(zip(expected, values, strict=False))
            if len(values) != len(expected):
                raise DocumentError(path, f"expected {len(expected)} fields, got {len(values)}", line=reader.line_num)

            try:
                rows.append(model.model_validate(row))

            except ValidationError as exception:
                first: Any = exception.errors()[0]
                raise DocumentError(
                    path, f"{'.'.join(map(str, first['loc']))}: {first['msg']}", line=reader.line_num
                ) from exception

        return rows
