"""Seed fan-out over a process pool and the per-estimator summary of final errors."""

import asyncio
from collections.abc import Iterable, Sequence
from concurrent.futures import Executor, ProcessPoolExecutor
from typing import Annotated, Final, final

import numpy as np
from pydantic import Field

from segekf.sim.scenario import Estimator, RunLog, Scenario, run_scenario
from segekf.tracing import TraceContext, Tracer
from segekf.utils import Entity, gather

__all__: Final[tuple[str, ...]] = ("SummaryRow", "run_batch", "summarize")

_TRACER: Final[Tracer] = Tracer(__name__)


@final
class SummaryRow(Entity):
    estimator: Estimator
    runs: Annotated[int, Field(ge=0)]
    median: float
    q25: float
    q75: float
    iqr: float


def _run_packed(packed_scenario: bytes, seed: int, packed_context: bytes) -> bytes:
    """Worker entry point; everything crossing the process boundary is bytes."""
    context: Final[TraceContext] = TraceContext.from_bytes(packed_context)
    with context.attach(_TRACER):
        return run_scenario(Scenario.from_bytes(packed_scenario).with_seed(seed)).to_bytes()


async def _submit(executor: Executor, packed_scenario: bytes, seed: int, packed_context: bytes) -> bytes:
    return await asyncio.get_running_loop().run_in_executor(
        executor, _run_packed, packed_scenario, seed, packed_context
    )


@_TRACER.with_span_async(Tracer.INFO, "run_batch")
async def run_batch(scenario: Scenario, seeds: Sequence[int], /, *, max_workers: int | None = None) -> list[RunLog]:
    """Run ``scenario`` once per seed, in seed order; ``max_workers=1`` keeps everything in this process."""
    packed_scenario: Final[bytes] = scenario.to_bytes()
    packed_context: Final[bytes] = TraceContext.get_current().to_bytes()
    _TRACER.info("batch started", seeds=len(seeds), max_workers=max_workers)

    packed: tuple[bytes, ...]
    if max_workers == 1:
        packed = tuple([_run_packed(packed_scenario, seed, packed_context) for seed in seeds])

    else:
        with ProcessPoolExecutor(max_workers=max_workers) as executor:
            packed = await gather(_submit(executor, packed_scenario, seed, packed_context) for seed in seeds)

    return [RunLog.from_bytes(log) for log in packed]


def summarize(logs: Iterable[RunLog], /) -> tuple[SummaryRow, ...]:
    """Median and interquartile range of the final position error of every estimator."""
    finals: Final[list[RunLog]] = list(logs)
    rows: Final[list[SummaryRow]] = []
    for estimator in Estimator:
        errors = np.array([log.last.final_error(estimator) for log in finals], dtype=np.float64)
        if errors.size == 0:
            rows.append(SummaryRow(estimator=estimator, runs=0, median=np.nan, q25=np.nan, q75=np.nan, iqr=np.nan))
            continue

        q25, median, q75 = (float(value) for value in np.percentile(errors, (25.0, 50.0, 75.0)))
        rows.append(SummaryRow(estimator=estimator, runs=errors.size, median=median, q25=q25, q75=q75, iqr=q75 - q25))

    return tuple(rows)
