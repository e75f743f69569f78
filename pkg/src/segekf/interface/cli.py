"""``segekf`` command line.

Exit codes: 0 on success, 1 on bad input (unreadable or invalid files, bad arguments), 2 on any other failure. A failed
command removes every file it already wrote.
"""

import argparse
import asyncio
import enum
import importlib.metadata
import importlib.util
import os
import sys
import time
from collections.abc import Callable, Iterable, Sequence
from enum import IntEnum
from pathlib import Path
from typing import ClassVar, Final, NoReturn, Self, final

from pydantic import ValidationError

from segekf.core.errors import DocumentError, Error
from segekf.core.extraction import ExtractedSegment, ExtractionConfig, ExtractionMode, Scan, extract_segments
from segekf.core.geometry import Pose
from segekf.core.matching import GlobalMap, MatchConfig, MatchPair, SegmentFeature, match_segments
from segekf.interface.files import (
    DocumentKind,
    ToolConfig,
    check_document,
    load_map,
    load_scenario,
    load_tool_config,
    read_scan_log,
)
from segekf.interface.plots import plot_match, plot_segments, plot_trajectories
from segekf.interface.records import DeviationRow, PairRow, SegmentRow, TimingRow, read_records, write_records
from segekf.sim.batch import SummaryRow, run_batch, summarize
from segekf.sim.scenario import RunLog, RunRow, Scenario, SkipRecord
from segekf.sim.world import World
from segekf.tracing import Tracer
from segekf.utils import Entity

__all__: Final[tuple[str, ...]] = ("ExitCode", "UsageError", "main", "run")

_TRACER: Final[Tracer] = Tracer(__name__)

SEED_VARIABLE: Final[str] = "SEGEKF_SEED"


@final
class ExitCode(IntEnum):
    OK = 0
    INPUT = enum.auto()
    RUNTIME = enum.auto()


@final
class UsageError(Error):
    __slots__: ClassVar[tuple[str, ...]] = ()


@final
class _Parser(argparse.ArgumentParser):
    def error(self: Self, message: str) -> NoReturn:  # type: ignore[override]
        raise UsageError(message)


@final
class _Outputs:
    """Files written by the running command, so that a failure can take them back."""

    __slots__: ClassVar[tuple[str, ...]] = ("__directory", "__written")

    def __init__(self: Self, /, directory: Path) -> None:
        self.__directory: Final[Path] = directory
        self.__written: Final[list[Path]] = []

    def claim(self: Self, /, name: str) -> Path:
        if len(self.__written) == 0:
            self.__directory.mkdir(parents=True, exist_ok=True)

        path: Final[Path] = self.__directory / name
        self.__written.append(path)
        return path

    def records(self: Self, /, name: str, model: type[Entity], rows: Iterable[Entity]) -> None:
        write_records(self.claim(name), model, rows)

    def discard(self: Self, /) -> None:
        for path in reversed(self.__written):
            path.unlink(missing_ok=True)

        self.__written.clear()


@final
class _Console:
    __slots__: ClassVar[tuple[str, ...]] = ("__quiet",)

    def __init__(self: Self, /, *, quiet: bool) -> None:
        self.__quiet: Final[bool] = quiet

    def say(self: Self, /, line: str) -> None:
        if not self.__quiet:
            sys.stdout.write(f"{line}\n")


def _seeds(arguments: argparse.Namespace, scenario: Scenario) -> list[int]:
    if arguments.seeds is not None:
        return list(arguments.seeds)

    value: Final[str | None] = os.environ.get(SEED_VARIABLE)
    if value is None or len(value.strip()) == 0:
        return [scenario.seed]

    try:
        seed: Final[int] = int(value)

    except ValueError as exception:
        message: Final[str] = f"{SEED_VARIABLE} must be an integer, got {value!r}."
        raise UsageError(message) from exception

    return [seed]


@_TRACER.with_span_sync(Tracer.INFO, "localize")
def _localize(arguments: argparse.Namespace, outputs: _Outputs, console: _Console) -> ExitCode:
    scenario: Final[Scenario] = load_scenario(arguments.scenario)
    seeds: Final[list[int]] = _seeds(arguments, scenario)
    for seed in seeds:
        if not 0 <= seed < 2**64:
            message: Final[str] = f"Seed must be in [0, 2^64), got {seed}."
            raise UsageError(message)

    workers: Final[int | None] = 1 if len(seeds) == 1 else arguments.workers
    logs: Final[list[RunLog]] = asyncio.run(run_batch(scenario, seeds, max_workers=workers))

    # Nothing is written until every run has finished.
    world: Final[World] = scenario.world.build()
    for log in logs:
        outputs.records(f"run_seed{log.seed}.csv", RunRow, log.rows)
        outputs.records(f"deviation_seed{log.seed}.csv", DeviationRow, DeviationRow.from_run_log(log))
        plot_trajectories(log, world, outputs.claim(f"trajectory_seed{log.seed}.svg"))
        if len(log.skips) > 0:
            outputs.records(f"run_seed{log.seed}_skips.csv", SkipRecord, log.skips)

        last: RunRow = log.last
        console.say(
            f"seed {log.seed}: final error odometry {last.err_odo:.4f} m, "
            f"lines {last.err_lrf:.4f} m, lines + heading {last.err_full:.4f} m"
        )

    summary: Final[tuple[SummaryRow, ...]] = summarize(logs)
    outputs.records("summary.csv", SummaryRow, summary)
    for row in summary:
        console.say(f"{row.estimator}: median {row.median:.4f} m, iqr {row.iqr:.4f} m over {row.runs} runs")

    return ExitCode.OK


@_TRACER.with_span_sync(Tracer.INFO, "extract")
def _extract(arguments: argparse.Namespace, outputs: _Outputs, console: _Console) -> ExitCode:
    tool: Final[ToolConfig] = load_tool_config(arguments.config)
    extraction: Final[ExtractionConfig] = (
        ExtractionConfig.model_validate(tool.extraction.model_dump() | {"mode": arguments.mode})
        if arguments.mode is not None
        else tool.extraction
    )
    scans: Final[list[Scan]] = read_scan_log(arguments.scanlog, tool.sensor)

    timings: Final[list[TimingRow]] = []
    for index, scan in enumerate(scans):
        started: float = time.perf_counter()
        segments: list[ExtractedSegment] = extract_segments(scan, extraction)
        elapsed: float = time.perf_counter() - started
        timings.append(TimingRow(scan=index, seconds=elapsed))

        outputs.records(
            f"scan_{index:04d}_segments.csv",
            SegmentRow,
            (SegmentRow.from_segment(index, number, segment) for number, segment in enumerate(segments)),
        )
        plot_segments(scan.to_xy(extraction.min_range), segments, outputs.claim(f"scan_{index:04d}_segments.svg"))
        console.say(f"scan {index:04d}: {len(segments)} segments in {elapsed * 1e3:.2f} ms")

    if len(timings) > 0:
        outputs.records("timing.csv", TimingRow, timings)

    return ExitCode.OK


@_TRACER.with_span_sync(Tracer.INFO, "match")
def _match(arguments: argparse.Namespace, outputs: _Outputs, console: _Console) -> ExitCode:
    rows: Final[list[SegmentRow]] = [
        row
        for row in read_records(arguments.segments, SegmentRow)
        if arguments.scan is None or row.scan == arguments.scan
    ]
    features: Final[list[SegmentFeature]] = [row.to_feature() for row in rows]
    global_map: Final[GlobalMap] = load_map(arguments.map)
    odom: Final[Pose] = Pose(*arguments.odom)
    config: Final[MatchConfig] = (
        load_tool_config(arguments.config).matching if arguments.config is not None else MatchConfig()
    )

    pairs: Final[list[MatchPair]] = match_segments(features, global_map, odom, config)
    outputs.records("pairs.csv", PairRow, (PairRow.from_pair(pair) for pair in pairs))
    plot_match(features, global_map, odom, pairs, outputs.claim("match.svg"))
    console.say(f"{len(pairs)} pairs from {len(features)} local and {len(global_map)} mapped segments")
    return ExitCode.OK


@_TRACER.with_span_sync(Tracer.INFO, "check")
def _check(arguments: argparse.Namespace, _: _Outputs, console: _Console) -> ExitCode:
    check_document(arguments.file, arguments.kind)
    console.say(f"{arguments.file.as_posix()}: valid {arguments.kind} document")
    return ExitCode.OK


def _version() -> str:
    try:
        return importlib.metadata.version("segekf")

    except importlib.metadata.PackageNotFoundError:
        return "unknown"


def _parser() -> argparse.ArgumentParser:
    common: Final[argparse.ArgumentParser] = _Parser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    common.add_argument("--trace", action="store_true", help="print traces to the console (needs the logfire extra)")

    parser: Final[argparse.ArgumentParser] = _Parser(
        prog="segekf", description="Line-segment EKF localization: simulate, extract, match and report."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    commands = parser.add_subparsers(dest="name", required=True, parser_class=_Parser)

    localize: Final[argparse.ArgumentParser] = commands.add_parser(
        "localize", parents=[common], help="run a scenario for every seed"
    )
    localize.add_argument("scenario", type=Path)
    localize.add_argument("--out-dir", type=Path, default=Path("out"))
    localize.add_argument("--seeds", type=int, nargs="+", default=None, help=f"overrides {SEED_VARIABLE}")
    localize.add_argument("--workers", type=int, default=None, help="process pool size, 1 runs in-process")
    localize.set_defaults(command=_localize)

    extract: Final[argparse.ArgumentParser] = commands.add_parser(
        "extract", parents=[common], help="extract segments from a scan log"
    )
    extract.add_argument("scanlog", type=Path)
    extract.add_argument("config", type=Path)
    extract.add_argument("--out-dir", type=Path, default=Path("out"))
    extract.add_argument("--mode", type=ExtractionMode, choices=tuple(ExtractionMode), default=None)
    extract.set_defaults(command=_extract)

    match: Final[argparse.ArgumentParser] = commands.add_parser(
        "match", parents=[common], help="match extracted segments to a map"
    )
    match.add_argument("segments", type=Path, help="segment report written by `extract`")
    match.add_argument("map", type=Path)
    match.add_argument("--odom", type=float, nargs=3, metavar=("X", "Y", "THETA"), default=(0.0, 0.0, 0.0))
    match.add_argument("--scan", type=int, default=None, help="only use rows of this scan")
    match.add_argument("--config", type=Path, default=None)
    match.add_argument("--out-dir", type=Path, default=Path("out"))
    match.set_defaults(command=_match)

    check: Final[argparse.ArgumentParser] = commands.add_parser(
        "check", parents=[common], help="validate an input document"
    )
    check.add_argument("file", type=Path)
    check.add_argument("--kind", type=DocumentKind, choices=tuple(DocumentKind), default=DocumentKind.SCENARIO)
    check.set_defaults(command=_check, out_dir=Path())
    return parser


def _configure_tracing() -> None:
    if importlib.util.find_spec("logfire") is None:
        message: Final[str] = "--trace needs the `logfire` extra."
        raise UsageError(message)

    import logfire  # noqa: PLC0415

    logfire.configure(
        send_to_logfire=False,
        service_name="segekf",
        service_version=_version(),
        distributed_tracing=True,
        min_level="debug",
        scrubbing=False,
    )


def main(argv: Sequence[str] | None = None, /) -> int:
    """Run one command and return its exit code; never raises except for ``--help`` and ``--version``."""
    outputs: _Outputs | None = None
    try:
        arguments: Final[argparse.Namespace] = _parser().parse_args(argv)
        if arguments.trace:
            _configure_tracing()

        outputs = _Outputs(arguments.out_dir)
        command: Final[Callable[[argparse.Namespace, _Outputs, _Console], ExitCode]] = arguments.command
        return command(arguments, outputs, _Console(quiet=arguments.quiet))

    except (UsageError, DocumentError, ValidationError) as exception:
        if outputs is not None:
            outputs.discard()

        sys.stderr.write(f"segekf: {exception}\n")
        return ExitCode.INPUT

    except Exception as exception:  # noqa: BLE001
        if outputs is not None:
            outputs.discard()

        _TRACER.error("command failed", exception_=exception)
        sys.stderr.write(f"segekf: {type(exception).__name__}: {exception}\n")
        return ExitCode.RUNTIME


def run() -> None:
    sys.exit(main(sys.argv[1:]))
