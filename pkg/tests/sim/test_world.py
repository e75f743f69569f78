import math

import numpy as np
import pytest

from segekf.core.geometry import Pose, Segment
from segekf.core.kinematics import WheelSpeeds
from segekf.sim.world import SensorConfig, SensorStreams, World, encoder_readout, heading_sensor, raycast_scan


@pytest.fixture
def square() -> World:
    return World.rectangle(4.0, 4.0)


def test_rectangle_is_closed(square: World) -> None:
    walls = square.to_array()
    assert walls.shape == (4, 4)
    np.testing.assert_array_equal(walls[:, 2:4], np.roll(walls[:, 0:2], -1, axis=0))
    assert len(square.to_map()) == 4


def test_world_needs_walls() -> None:
    with pytest.raises(ValueError, match="at least one wall"):
        World(())


@pytest.mark.parametrize(("bearing", "expected"), [(0.0, 2.0), (0.25 * math.pi, 2.0 * math.sqrt(2.0))])
def test_raycast_from_the_center(bearing: float, expected: float) -> None:
    # Walls overrun the corners so that the diagonal beam lands inside two of them.
    overrun = World.from_coordinates(
        [(-0.1, 0.0, 4.1, 0.0), (4.0, -0.1, 4.0, 4.1), (4.1, 4.0, -0.1, 4.0), (0.0, 4.1, 0.0, -0.1)]
    )
    scan = raycast_scan(overrun, Pose(2.0, 2.0, 0.0), SensorConfig(range_noise_sigma=0.0), np.random.default_rng(0))
    point = min(scan.points, key=lambda point: abs(point.phi - bearing))
    assert point.phi == pytest.approx(bearing, abs=1e-12)
    assert point.r == pytest.approx(expected, abs=1e-9)
    assert point.valid


def test_open_side_reports_max_range() -> None:
    world = World((Segment.from_coordinates(2.0, -1.0, 2.0, 1.0),))
    sensor = SensorConfig(range_noise_sigma=0.0, max_range=8.0)
    scan = raycast_scan(world, Pose(0.0, 0.0, 0.0), sensor, np.random.default_rng(0))

    hits = [point for point in scan.points if point.valid]
    misses = [point for point in scan.points if not point.valid]
    assert all(point.r == 8.0 for point in misses)
    assert all(abs(point.phi) <= math.atan2(1.0, 2.0) + 1e-12 for point in hits)
    # Capped beams never reach extraction.
    assert len(scan.to_xy()) == len(hits)


def test_wall_beyond_max_range_is_flagged() -> None:
    world = World((Segment.from_coordinates(9.0, -1.0, 9.0, 1.0),))
    scan = raycast_scan(world, Pose(0.0, 0.0, 0.0), SensorConfig(), np.random.default_rng(0))
    assert not any(point.valid for point in scan.points)


def test_noisy_ranges_stay_in_bounds(square: World) -> None:
    sensor = SensorConfig(range_noise_sigma=0.5, max_range=2.5)
    rng = np.random.default_rng(5)
    for _ in range(20):
        scan = raycast_scan(square, Pose(2.0, 2.0, float(rng.uniform(-math.pi, math.pi))), sensor, rng)
        assert all(0.0 < point.r <= sensor.max_range for point in scan.points)


@pytest.mark.parametrize(("step", "beams"), [(math.radians(1.0), 181), (math.radians(0.5), 361)])
def test_beam_count(step: float, beams: int) -> None:
    sensor = SensorConfig(angular_step=step)
    assert sensor.beam_count == beams
    assert sensor.bearings()[0] == pytest.approx(-0.5 * math.pi)
    assert sensor.bearings()[-1] == pytest.approx(0.5 * math.pi)


def test_fov_must_hold_whole_steps() -> None:
    with pytest.raises(ValueError, match="whole number"):
        SensorConfig(angular_step=math.radians(0.7))


def test_heading_sensor() -> None:
    pose = Pose(0.0, 0.0, 3.1)
    assert heading_sensor(pose, SensorConfig(heading_var=0.0), np.random.default_rng(0)) == 3.1

    origin = Pose(0.0, 0.0, 0.0)
    readings = [heading_sensor(origin, SensorConfig(), np.random.default_rng(seed)) for seed in range(2000)]
    assert float(np.var(readings)) == pytest.approx(0.0265, rel=0.1)

    wrapped = heading_sensor(Pose(0.0, 0.0, math.pi), SensorConfig(heading_var=1.0), np.random.default_rng(1))
    assert -math.pi < wrapped <= math.pi


def test_encoder_readout() -> None:
    speeds = WheelSpeeds(2.0, -1.0)
    assert encoder_readout(speeds, 0.0, np.random.default_rng(0)) == speeds
    assert encoder_readout(WheelSpeeds(0.0, 0.0), 0.5, np.random.default_rng(0)) == WheelSpeeds(0.0, 0.0)

    rng = np.random.default_rng(2)
    left = [encoder_readout(speeds, 0.01, rng).omega_l for _ in range(4000)]
    assert float(np.var(left)) == pytest.approx(0.01 * 4.0, rel=0.1)

    with pytest.raises(ValueError, match="non-negative"):
        encoder_readout(speeds, -0.01, rng)


def test_streams_are_reproducible_and_independent() -> None:
    first = SensorStreams.from_seed(7)
    second = SensorStreams.from_seed(7)
    assert first.lrf.normal() == second.lrf.normal()

    second.encoder.normal(size=100)
    assert first.heading.normal() == second.heading.normal()
    assert SensorStreams.from_seed(8).lrf.normal() != SensorStreams.from_seed(7).lrf.normal()
