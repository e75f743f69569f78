import asyncio
import math

import pytest

from segekf.sim.batch import run_batch, summarize
from segekf.sim.scenario import CommandBlock, Estimator, RunLog, RunRow, Scenario, WorldConfig


@pytest.fixture
def short() -> Scenario:
    return Scenario(
        world=WorldConfig(
            walls=((0.0, 0.0, 4.0, 0.0), (4.0, 0.0, 4.0, 4.0), (4.0, 4.0, 0.0, 4.0), (0.0, 4.0, 0.0, 0.0))
        ),
        start=(2.0, 1.0, 0.0),
        commands=(CommandBlock(omega_l=4.0, omega_r=3.0, steps=20),),
    )


def _log(seed: int, errors: tuple[float, float, float]) -> RunLog:
    zeros = dict.fromkeys(
        (
            "t",
            "true_x",
            "true_y",
            "true_th",
            "odo_x",
            "odo_y",
            "odo_th",
            "ekf_lrf_x",
            "ekf_lrf_y",
            "ekf_lrf_th",
            "ekf_full_x",
            "ekf_full_y",
            "ekf_full_th",
        ),
        0.0,
    )
    row = RunRow(step=1, err_odo=errors[0], err_lrf=errors[1], err_full=errors[2], matches=0, **zeros)
    return RunLog(seed=seed, rows=(row,))


def test_in_process_batch_keeps_seed_order(short: Scenario) -> None:
    logs = asyncio.run(run_batch(short, [5, 3], max_workers=1))
    assert [log.seed for log in logs] == [5, 3]
    assert logs[0].rows[-1] != logs[1].rows[-1]


def test_pool_matches_in_process(short: Scenario) -> None:
    pooled = asyncio.run(run_batch(short, [0, 1, 2], max_workers=2))
    inline = asyncio.run(run_batch(short, [0, 1, 2], max_workers=1))
    assert pooled == inline


def test_empty_batch(short: Scenario) -> None:
    assert asyncio.run(run_batch(short, [], max_workers=1)) == []


def test_summarize_quartiles() -> None:
    logs = [_log(seed, (float(seed), 2.0 * seed, 0.5)) for seed in range(1, 6)]
    rows = {row.estimator: row for row in summarize(logs)}

    assert rows[Estimator.ODOMETRY].median == 3.0
    assert (rows[Estimator.ODOMETRY].q25, rows[Estimator.ODOMETRY].q75) == (2.0, 4.0)
    assert rows[Estimator.ODOMETRY].iqr == 2.0
    assert rows[Estimator.EKF_LRF].median == 6.0
    assert rows[Estimator.EKF_FULL].iqr == 0.0
    assert all(row.runs == 5 for row in rows.values())


def test_summarize_nothing() -> None:
    rows = summarize([])
    assert [row.estimator for row in rows] == list(Estimator)
    assert all(row.runs == 0 and math.isnan(row.median) for row in rows)
