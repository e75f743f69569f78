from pathlib import Path

import numpy as np
import pytest

from segekf.core.extraction import ExtractionConfig, extract_segments
from segekf.core.geometry import Pose
from segekf.core.matching import MatchConfig, match_segments
from segekf.interface.plots import plot_match, plot_segments, plot_trajectories
from segekf.sim.scenario import CommandBlock, RunLog, Scenario, WorldConfig, run_scenario
from segekf.sim.world import SensorConfig, World, raycast_scan


@pytest.fixture
def log(room: World) -> RunLog:
    scenario = Scenario(
        world=WorldConfig(walls=tuple(wall.to_coordinates() for wall in room.walls)),
        start=(2.5, 1.0, 0.0),
        commands=(CommandBlock(omega_l=4.0, omega_r=3.0, steps=30),),
    )
    return run_scenario(scenario)


def test_trajectory_plot_is_reproducible(log: RunLog, room: World, tmp_path: Path) -> None:
    plot_trajectories(log, room, tmp_path / "first.svg")
    plot_trajectories(log, room, tmp_path / "second.svg")

    first = (tmp_path / "first.svg").read_bytes()
    assert first.startswith(b"<?xml")
    assert b"Trajectories, seed 0" in first
    assert first == (tmp_path / "second.svg").read_bytes()


def test_segment_and_match_plots(room: World, tmp_path: Path) -> None:
    pose = Pose(2.5, 2.0, 0.0)
    scan = raycast_scan(room, pose, SensorConfig(), np.random.default_rng(0))
    segments = extract_segments(scan, ExtractionConfig())
    pairs = match_segments(segments, room.to_map(), pose, MatchConfig())

    plot_segments(scan.to_xy(0.4), segments, tmp_path / "segments.svg")
    plot_match(segments, room.to_map(), pose, pairs, tmp_path / "match.svg")

    assert f"{len(segments)} segments".encode() in (tmp_path / "segments.svg").read_bytes()
    assert f"{len(pairs)} pairs".encode() in (tmp_path / "match.svg").read_bytes()


def test_segment_plot_without_points(tmp_path: Path) -> None:
    plot_segments(np.zeros((0, 2)), [], tmp_path / "empty.svg")
    assert b"0 segments" in (tmp_path / "empty.svg").read_bytes()
