"""Input documents: YAML scenarios, maps and tool configs, plus plain-text scan logs.

Every YAML document carries ``schema: 1``. Validation failures are reported at the line and column of the offending
node.
"""

import enum
import math
from collections.abc import Iterable, Sequence
from enum import StrEnum
from pathlib import Path
from typing import Annotated, Any, Final, Self, final

import yaml
from pydantic import Field, ValidationError, field_validator
from yaml import MappingNode, MarkedYAMLError, Node, SequenceNode

from segekf.core.errors import DocumentError
from segekf.core.extraction import ExtractionConfig, Scan
from segekf.core.geometry import PolarPoint
from segekf.core.matching import GlobalMap, MatchConfig
from segekf.sim.scenario import Scenario
from segekf.sim.world import SensorConfig
from segekf.utils import Entity

__all__: Final[tuple[str, ...]] = (
    "SCHEMA_VERSION",
    "DocumentKind",
    "MapDocument",
    "ToolConfig",
    "check_document",
    "load_document",
    "load_map",
    "load_scenario",
    "load_tool_config",
    "read_scan_log",
    "write_scan_log",
)

SCHEMA_VERSION: Final[int] = 1


@final
class DocumentKind(StrEnum):
    SCENARIO = enum.auto()
    MAP = enum.auto()
    CONFIG = enum.auto()


@final
class MapDocument(Entity):
    """Walls as ``[x1, y1, x2, y2]`` in meters."""

    walls: Annotated[tuple[tuple[float, float, float, float], ...], Field(min_length=1)]

    @field_validator("walls")
    @classmethod
    def _check_walls(
        cls: type[Self], /, walls: tuple[tuple[float, float, float, float], ...]
    ) -> tuple[tuple[float, float, float, float], ...]:
        for index, (x1, y1, x2, y2) in enumerate(walls):
            if (x1, y1) == (x2, y2):
                message: Final[str] = f"Wall {index} has coinciding endpoints at ({x1}, {y1})."
                raise ValueError(message)

        return walls

    def build(self: Self, /) -> GlobalMap:
        return GlobalMap.from_coordinates(self.walls)


@final
class ToolConfig(Entity):
    """Settings of the ``extract`` and ``match`` commands; ``sensor`` describes how scan logs were recorded."""

    extraction: ExtractionConfig = ExtractionConfig()
    matching: MatchConfig = MatchConfig()
    sensor: SensorConfig = SensorConfig()


_MODELS: Final[dict[DocumentKind, type[Entity]]] = {
    DocumentKind.SCENARIO: Scenario,
    DocumentKind.MAP: MapDocument,
    DocumentKind.CONFIG: ToolConfig,
}


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")

    except FileNotFoundError as exception:
        raise DocumentError(path, "file not found") from exception

    except (OSError, UnicodeDecodeError) as exception:
        raise DocumentError(path, f"cannot read file: {exception}") from exception


def _locate(root: Node | None, location: Sequence[int | str]) -> tuple[int | None, int | None]:
    """1-based line and column of the deepest node reachable along ``location``."""
    if root is None:
        return None, None

    node: Node = root
    for key in location:
        if isinstance(node, MappingNode):
            matches: list[Node] = [value for name, value in node.value if getattr(name, "value", None) == str(key)]
            if len(matches) == 0:
                break

            node = matches[0]

        elif isinstance(node, SequenceNode) and isinstance(key, int) and 0 <= key < len(node.value):
            node = node.value[key]

        else:
            break

    return node.start_mark.line + 1, node.start_mark.column + 1


def load_document[M: Entity](path: Path, model: type[M], /) -> M:
    """Parse and validate a YAML document into ``model``.

    Raises:
        DocumentError: unreadable file, malformed YAML, wrong schema version or invalid content.
    """
    text: Final[str] = _read_text(path)
    try:
        root: Final[Node | None] = yaml.compose(text, Loader=yaml.SafeLoader)
        data: Final[Any] = yaml.safe_load(text)

    except MarkedYAMLError as exception:
        mark: Final[Any] = exception.problem_mark or exception.context_mark
        raise DocumentError(
            path,
            str(exception.problem or exception.context or "malformed YAML"),
            line=mark.line + 1 if mark is not None else None,
            column=mark.column + 1 if mark is not None else None,
        ) from exception

    if not isinstance(data, dict):
        raise DocumentError(path, "expected a mapping at the top level", line=1, column=1)

    schema: Final[Any] = data.pop("schema", None)
    if schema != SCHEMA_VERSION:
        line, column = _locate(root, ("schema",)) if schema is not None else (1, 1)
        raise DocumentError(
            path, f"unsupported schema {schema!r}, expected {SCHEMA_VERSION}", line=line, column=column
        )

    try:
        return model.model_validate(data)

    except ValidationError as exception:
        first: Final[Any] = exception.errors()[0]
        location: Final[tuple[int | str, ...]] = tuple(first["loc"])
        line, column = _locate(root, location)
        where: Final[str] = ".".join(map(str, location))
        raise DocumentError(
            path, f"{where}: {first['msg']}" if where else first["msg"], line=line, column=column
        ) from exception


def load_scenario(path: Path, /) -> Scenario:
    return load_document(path, Scenario)


def load_map(path: Path, /) -> GlobalMap:
    return load_document(path, MapDocument).build()


def load_tool_config(path: Path, /) -> ToolConfig:
    return load_document(path, ToolConfig)


def check_document(path: Path, kind: DocumentKind, /) -> Entity:
    return load_document(path, _MODELS[kind])


def read_scan_log(path: Path, /, sensor: SensorConfig) -> list[Scan]:
    """One scan per line, ``sensor.beam_count`` ranges in meters, ascending bearing; ``#`` starts a comment line.

    Readings at or beyond ``sensor.max_range`` are kept but flagged invalid.
    """
    bearings: Final[list[float]] = [float(value) for value in sensor.bearings()]
    scans: Final[list[Scan]] = []
    for number, line in enumerate(_read_text(path).splitlines(), start=1):
        stripped: str = line.strip()
        if len(stripped) == 0 or stripped.startswith("#"):
            continue

        fields: list[str] = stripped.split()
        if len(fields) != len(bearings):
            raise DocumentError(path, f"expected {len(bearings)} ranges, got {len(fields)}", line=number)

        ranges: list[float] = []
        for field in fields:
            try:
                value = float(field)

            except ValueError as exception:
                raise DocumentError(path, f"not a number: {field!r}", line=number) from exception

            if not math.isfinite(value) or value < 0.0:
                raise DocumentError(path, f"range must be finite and non-negative, got {field}", line=number)

            ranges.append(value)

        scans.append(
            Scan(
                tuple(
                    PolarPoint(r, phi, r < sensor.max_range) for r, phi in zip(ranges, bearings, strict=True)
                )
            )
        )

    return scans


def write_scan_log(path: Path, scans: Iterable[Scan], /) -> None:
    lines: Final[list[str]] = ["# segekf scan log: ranges in meters, ascending bearing"]
    lines.extend(" ".join(repr(point.r) for point in scan.points) for scan in scans)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
