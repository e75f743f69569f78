from pathlib import Path
from typing import ClassVar, Final, Self, final

__all__: Final[tuple[str, ...]] = (
    "CodecError",
    "DegenerateFitError",
    "DegenerateGeometryError",
    "DocumentError",
    "Error",
    "ScenarioError",
    "SingularInnovationError",
)


class Error(Exception):
    __slots__: ClassVar[tuple[str, ...]] = ()


@final
class DegenerateFitError(Error):
    __slots__: ClassVar[tuple[str, ...]] = ("denominator", "point_count")

    def __init__(self: Self, /, point_count: int, denominator: float) -> None:
        super().__init__(f"Cannot fit `y = m*x + k` to {point_count} points, x-spread is {denominator:.3e}.")
        self.point_count: Final[int] = point_count
        self.denominator: Final[float] = denominator


@final
class DegenerateGeometryError(Error):
    __slots__: ClassVar[tuple[str, ...]] = ("point_count", "spread")

    def __init__(self: Self, /, point_count: int, spread: float) -> None:
        super().__init__(f"Point cloud of {point_count} points has no line direction (anisotropy {spread:.3e}).")
        self.point_count: Final[int] = point_count
        self.spread: Final[float] = spread


@final
class SingularInnovationError(Error):
    __slots__: ClassVar[tuple[str, ...]] = ("condition",)

    def __init__(self: Self, /, condition: float) -> None:
        super().__init__(f"Innovation covariance is singular (condition number {condition:.3e}).")
        self.condition: Final[float] = condition


@final
class ScenarioError(Error):
    __slots__: ClassVar[tuple[str, ...]] = ()


@final
class CodecError(Error):
    __slots__: ClassVar[tuple[str, ...]] = ()


@final
class DocumentError(Error):
    """Malformed input file; line and column are 1-based when known."""

    __slots__: ClassVar[tuple[str, ...]] = ("column", "line", "path", "reason")

    def __init__(
        self: Self, /, path: Path, reason: str, *, line: int | None = None, column: int | None = None
    ) -> None:
        location: str = path.as_posix()
        if line is not None:
            location = f"{location}:{line}"

            if column is not None:
                location = f"{location}:{column}"

        super().__init__(f"{location}: {reason}")
        self.path: Final[Path] = path
        self.reason: Final[str] = reason
        self.line: Final[int | None] = line
        self.column: Final[int | None] = column
