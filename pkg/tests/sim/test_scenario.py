import asyncio
import math
from pathlib import Path

import pytest

from segekf.core.ekf import EkfConfig
from segekf.core.errors import ScenarioError
from segekf.interface.files import load_scenario
from segekf.interface.records import write_records
from segekf.sim.batch import run_batch, summarize
from segekf.sim.scenario import (
    CommandBlock,
    Estimator,
    RunRow,
    ScanSchedule,
    Scenario,
    WorldConfig,
    run_scenario,
)
from segekf.sim.world import SensorConfig

ROOM = WorldConfig(walls=((0.0, 0.0, 5.0, 0.0), (5.0, 0.0, 5.0, 4.0), (5.0, 4.0, 0.0, 4.0), (0.0, 4.0, 0.0, 0.0)))


@pytest.fixture
def noiseless() -> Scenario:
    """A slow drive along the middle of the room with every noise source switched off."""
    return Scenario(
        world=ROOM,
        start=(1.5, 2.0, 0.0),
        commands=(CommandBlock(omega_l=0.5, omega_r=0.5, steps=500),),
        encoder_delta=0.0,
        sensor=SensorConfig(range_noise_sigma=0.0, heading_var=0.0),
        ekf=EkfConfig(point_sigma=0.005, delta=0.0),
    )


@pytest.fixture
def room_loop(docs: Path) -> Scenario:
    return load_scenario(docs / "room_loop.yaml")


@pytest.fixture
def room_outage(docs: Path) -> Scenario:
    return load_scenario(docs / "room_outage.yaml")


def test_noiseless_run_tracks_truth(noiseless: Scenario) -> None:
    log = run_scenario(noiseless)

    assert len(log.rows) == noiseless.step_count + 1 == 501
    assert log.skips == ()
    for row in log.rows:
        assert max(row.err_odo, row.err_lrf, row.err_full) < 1e-6
        assert abs(row.ekf_full_th - row.true_th) < 1e-6
        assert abs(row.ekf_lrf_th - row.true_th) < 1e-6

    assert log.last.true_x == pytest.approx(1.5 + 500 * 0.1 * 0.05 * 0.5)
    assert log.last.matches == 3


def test_noiseless_run_with_map_from_first_scan(noiseless: Scenario) -> None:
    scenario = noiseless.model_copy(update={"schedule": ScanSchedule(map_from_first_scan=True)})
    log = run_scenario(scenario)
    assert max(log.last.err_lrf, log.last.err_full) < 1e-6
    assert log.last.matches > 0


def test_empty_first_scan_cannot_build_a_map() -> None:
    scenario = Scenario(
        world=WorldConfig(walls=((-2.0, -1.0, -2.0, 1.0),)),
        commands=(CommandBlock(omega_l=1.0, omega_r=1.0, steps=1),),
        schedule=ScanSchedule(map_from_first_scan=True),
    )
    with pytest.raises(ScenarioError, match="no wall"):
        run_scenario(scenario)


def test_rows_start_at_the_initial_estimate(room_loop: Scenario) -> None:
    scenario = room_loop.model_copy(update={"initial_estimate": (2.6, 0.7, 0.05)})
    first = run_scenario(scenario).rows[0]
    assert (first.step, first.t) == (0, 0.0)
    assert (first.odo_x, first.odo_y, first.odo_th) == (2.6, 0.7, 0.05)
    assert first.err_odo == pytest.approx(math.hypot(0.1, 0.1))


def test_same_seed_same_log(room_loop: Scenario, tmp_path: Path) -> None:
    first = run_scenario(room_loop.with_seed(3))
    second = run_scenario(room_loop.with_seed(3))
    assert first == second

    write_records(tmp_path / "first.csv", RunRow, first.rows)
    write_records(tmp_path / "second.csv", RunRow, second.rows)
    assert (tmp_path / "first.csv").read_bytes() == (tmp_path / "second.csv").read_bytes()


def test_different_seeds_differ(room_loop: Scenario) -> None:
    assert run_scenario(room_loop.with_seed(1)).last != run_scenario(room_loop.with_seed(2)).last


def test_covariance_stays_healthy(room_loop: Scenario, room_outage: Scenario, noiseless: Scenario) -> None:
    for scenario in (room_loop, room_outage, noiseless):
        log = run_scenario(scenario)
        assert log.max_asymmetry < 1e-12
        assert log.min_eigenvalue >= -1e-9


def test_scan_outage_stops_line_matches(room_outage: Scenario) -> None:
    log = run_scenario(room_outage)
    assert all(row.matches == 0 for row in log.rows[150:300])
    assert any(row.matches > 0 for row in log.rows[1:150])


def test_schedule() -> None:
    schedule = ScanSchedule(scan_every=2, scan_outages=((4, 8),), heading_every=3)
    assert [index for index in range(12) if schedule.scans_at(index)] == [0, 2, 8, 10]
    assert [index for index in range(7) if schedule.heading_at(index)] == [0, 3, 6]

    with pytest.raises(ValueError, match="is empty"):
        ScanSchedule(scan_outages=((5, 5),))


def test_scenario_helpers(room_loop: Scenario) -> None:
    assert room_loop.step_count == 300
    assert len(list(room_loop.iter_commands())) == 300
    reseeded = room_loop.with_seed(42)
    assert reseeded.seed == 42
    assert reseeded.model_copy(update={"seed": room_loop.seed}) == room_loop


def test_scenario_rejects_unknown_fields() -> None:
    with pytest.raises(ValueError, match="Extra inputs"):
        Scenario.model_validate(
            {"world": ROOM.model_dump(), "commands": [{"omega_l": 1, "omega_r": 1, "steps": 1}], "speed": 3}
        )


def _medians(scenario: Scenario) -> dict[Estimator, float]:
    logs = asyncio.run(run_batch(scenario, range(20)))
    for log in logs:
        assert log.max_asymmetry < 1e-12
        assert log.min_eigenvalue >= -1e-9

    return {row.estimator: row.median for row in summarize(logs)}


@pytest.mark.slow
def test_lines_beat_odometry_around_the_loop(room_loop: Scenario) -> None:
    medians = _medians(room_loop)

    assert medians[Estimator.EKF_LRF] < medians[Estimator.ODOMETRY]
    assert medians[Estimator.EKF_FULL] < 0.5 * medians[Estimator.ODOMETRY]
    # Walls matched on every step leave the heading reading next to nothing to add, the medians agree within a percent.
    assert medians[Estimator.EKF_FULL] <= 1.01 * medians[Estimator.EKF_LRF]


@pytest.mark.slow
def test_heading_carries_the_filter_through_an_outage(room_outage: Scenario) -> None:
    medians = _medians(room_outage)

    assert medians[Estimator.EKF_FULL] < 0.75 * medians[Estimator.EKF_LRF]
    assert medians[Estimator.EKF_LRF] < medians[Estimator.ODOMETRY]
    assert medians[Estimator.EKF_FULL] < 0.5 * medians[Estimator.ODOMETRY]
