import math
from pathlib import Path

import numpy as np
import pytest

from segekf.core.geometry import Pose
from segekf.interface import cli
from segekf.interface.cli import SEED_VARIABLE, ExitCode, main
from segekf.interface.files import write_scan_log
from segekf.interface.records import PairRow, SegmentRow, read_records
from segekf.sim.scenario import RunRow
from segekf.sim.world import SensorConfig, World, raycast_scan

SQUARE_POSE = Pose(2.0, 2.0, 0.25 * math.pi)

SQUARE_MAP = """\
schema: 1
walls:
  - [0.0, 0.0, 4.0, 0.0]
  - [4.0, 0.0, 4.0, 4.0]
  - [4.0, 4.0, 0.0, 4.0]
  - [0.0, 4.0, 0.0, 0.0]
"""

SCENARIO = """\
schema: 1
world:
  walls:
    - [0.0, 0.0, 4.0, 0.0]
    - [4.0, 0.0, 4.0, 4.0]
    - [4.0, 4.0, 0.0, 4.0]
    - [0.0, 4.0, 0.0, 0.0]
start: [2.0, 1.0, 0.0]
commands:
  - {omega_l: 4.0, omega_r: 3.0, steps: 10}
seed: 11
"""


@pytest.fixture
def full_turn() -> SensorConfig:
    return SensorConfig(fov=math.tau, angular_step=math.radians(1.0), range_noise_sigma=0.0)


@pytest.fixture
def config(tmp_path: Path, full_turn: SensorConfig) -> Path:
    path = tmp_path / "extract.yaml"
    path.write_text(
        f"schema: 1\nsensor:\n  fov: {full_turn.fov!r}\n  angular_step: {full_turn.angular_step!r}\n",
        encoding="utf-8",
    )
    return path


@pytest.fixture
def scan_log(tmp_path: Path, full_turn: SensorConfig) -> Path:
    """Two identical noiseless full-turn scans from the middle of a 4 m x 4 m room."""
    scan = raycast_scan(World.rectangle(4.0, 4.0), SQUARE_POSE, full_turn, np.random.default_rng(0))
    path = tmp_path / "scans.txt"
    write_scan_log(path, [scan, scan])
    return path


@pytest.fixture
def scenario(tmp_path: Path) -> Path:
    path = tmp_path / "scenario.yaml"
    path.write_text(SCENARIO, encoding="utf-8")
    return path


def _files(directory: Path) -> set[str]:
    return {path.name for path in directory.iterdir()} if directory.exists() else set()


def test_extract_then_match(tmp_path: Path, scan_log: Path, config: Path) -> None:
    out = tmp_path / "out"
    assert main(["extract", str(scan_log), str(config), "--out-dir", str(out), "--quiet"]) == ExitCode.OK
    assert _files(out) == {
        "scan_0000_segments.csv",
        "scan_0000_segments.svg",
        "scan_0001_segments.csv",
        "scan_0001_segments.svg",
        "timing.csv",
    }
    segments = read_records(out / "scan_0000_segments.csv", SegmentRow)
    assert len(segments) == 4

    map_path = tmp_path / "map.yaml"
    map_path.write_text(SQUARE_MAP, encoding="utf-8")
    odom = [repr(SQUARE_POSE.x), repr(SQUARE_POSE.y), repr(SQUARE_POSE.theta)]
    arguments = ["match", str(out / "scan_0000_segments.csv"), str(map_path), "--odom", *odom, "--scan", "0"]
    assert main([*arguments, "--config", str(config), "--out-dir", str(out)]) == ExitCode.OK

    pairs = read_records(out / "pairs.csv", PairRow)
    assert len(pairs) == 4
    assert {pair.global_index for pair in pairs} == {0, 1, 2, 3}
    assert all(abs(pair.rho_residual) < 1e-9 for pair in pairs)
    assert (out / "match.svg").exists()


def test_match_against_a_disjoint_map(tmp_path: Path, scan_log: Path, config: Path) -> None:
    out = tmp_path / "out"
    assert main(["extract", str(scan_log), str(config), "--out-dir", str(out), "--quiet"]) == ExitCode.OK
    map_path = tmp_path / "far.yaml"
    map_path.write_text("schema: 1\nwalls:\n  - [10.0, 10.0, 11.0, 10.0]\n", encoding="utf-8")

    assert main(["match", str(out / "scan_0000_segments.csv"), str(map_path), "--out-dir", str(out)]) == ExitCode.OK
    assert read_records(out / "pairs.csv", PairRow) == []


def test_extract_mode_override(tmp_path: Path, scan_log: Path, config: Path) -> None:
    out = tmp_path / "out"
    arguments = ["extract", str(scan_log), str(config), "--out-dir", str(out), "--mode", "dynamic", "--quiet"]
    assert main(arguments) == ExitCode.OK
    assert len(read_records(out / "scan_0001_segments.csv", SegmentRow)) == 4


def test_empty_scan_log_writes_nothing(tmp_path: Path, config: Path) -> None:
    log = tmp_path / "empty.txt"
    log.write_text("# nothing recorded\n", encoding="utf-8")
    out = tmp_path / "out"
    assert main(["extract", str(log), str(config), "--out-dir", str(out)]) == ExitCode.OK
    assert _files(out) == set()


def test_localize_single_seed(tmp_path: Path, scenario: Path) -> None:
    out = tmp_path / "out"
    assert main(["localize", str(scenario), "--out-dir", str(out), "--seeds", "3", "--quiet"]) == ExitCode.OK
    assert _files(out) == {"run_seed3.csv", "deviation_seed3.csv", "trajectory_seed3.svg", "summary.csv"}
    assert len(read_records(out / "run_seed3.csv", RunRow)) == 11


def test_localize_is_deterministic(tmp_path: Path, scenario: Path) -> None:
    for name in ("first", "second"):
        assert main(["localize", str(scenario), "--out-dir", str(tmp_path / name), "--quiet"]) == ExitCode.OK

    for name in ("run_seed11.csv", "deviation_seed11.csv", "trajectory_seed11.svg", "summary.csv"):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()


def test_localize_seed_from_environment(tmp_path: Path, scenario: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv(SEED_VARIABLE, "5")
    out = tmp_path / "out"
    assert main(["localize", str(scenario), "--out-dir", str(out), "--quiet"]) == ExitCode.OK
    assert "run_seed5.csv" in _files(out)

    assert main(["localize", str(scenario), "--out-dir", str(out), "--seeds", "6", "--quiet"]) == ExitCode.OK
    assert "run_seed6.csv" in _files(out)


def test_localize_bad_seed_environment(
    tmp_path: Path, scenario: Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
) -> None:
    monkeypatch.setenv(SEED_VARIABLE, "seven")
    assert main(["localize", str(scenario), "--out-dir", str(tmp_path / "out")]) == ExitCode.INPUT
    assert SEED_VARIABLE in capsys.readouterr().err


def test_localize_rejects_negative_seeds(tmp_path: Path, scenario: Path) -> None:
    assert main(["localize", str(scenario), "--out-dir", str(tmp_path), "--seeds", "-1"]) == ExitCode.INPUT


def test_failure_removes_written_files(tmp_path: Path, scenario: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    def broken(*_: object) -> None:
        message = "disk full"
        raise OSError(message)

    monkeypatch.setattr(cli, "plot_trajectories", broken)
    out = tmp_path / "out"

    assert main(["localize", str(scenario), "--out-dir", str(out), "--seeds", "1", "--quiet"]) == ExitCode.RUNTIME
    assert _files(out) == set()


def test_invalid_scenario_reports_its_location(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    path = tmp_path / "bad.yaml"
    path.write_text(SCENARIO.replace("steps: 10", "steps: 0"), encoding="utf-8")

    assert main(["localize", str(path), "--out-dir", str(tmp_path / "out")]) == ExitCode.INPUT
    assert f"{path.as_posix()}:10:" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_check(docs: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["check", str(docs / "room_loop.yaml")]) == ExitCode.OK
    assert "valid scenario document" in capsys.readouterr().out
    assert main(["check", str(docs / "room_map.yaml"), "--kind", "map", "--quiet"]) == ExitCode.OK
    assert main(["check", str(docs / "extract.yaml"), "--kind", "config", "--quiet"]) == ExitCode.OK
    assert main(["check", str(docs / "room_map.yaml"), "--kind", "scenario", "--quiet"]) == ExitCode.INPUT


def test_missing_input_is_an_input_error(tmp_path: Path) -> None:
    assert main(["check", str(tmp_path / "absent.yaml")]) == ExitCode.INPUT


@pytest.mark.parametrize(
    "argv", [[], ["teleport"], ["match", "a.csv"], ["extract", "a", "b", "--mode", "loose"], ["localize"]]
)
def test_usage_errors(argv: list[str], capsys: pytest.CaptureFixture[str]) -> None:
    assert main(argv) == ExitCode.INPUT
    assert capsys.readouterr().err.startswith("segekf: ")
