import math
from pathlib import Path
from typing import Final

import numpy as np
import pytest

from segekf.core.kinematics import RobotParams
from segekf.sim.world import SensorConfig, World

DOCS: Final[Path] = Path(__file__).parents[1] / "docs"


@pytest.fixture
def params() -> RobotParams:
    return RobotParams(wheel_radius=0.05, axle_length=0.6, sample_period=0.1)


@pytest.fixture
def room() -> World:
    return World.rectangle(5.0, 4.0)


@pytest.fixture
def quiet_sensor() -> SensorConfig:
    """361 beams over a half turn, no noise on either sensor."""
    return SensorConfig(fov=math.pi, angular_step=math.radians(0.5), range_noise_sigma=0.0, heading_var=0.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20121)


@pytest.fixture
def docs() -> Path:
    return DOCS
