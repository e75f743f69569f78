"""Discrete differential-drive model and the Jacobians consumed by the prediction step.

The heading update uses ``omega_l - omega_r``: a robot whose left wheel spins faster turns counter-clockwise.
"""

import math
from dataclasses import dataclass
from typing import Annotated, Final, Self, final

import numpy as np
from pydantic import Field

from segekf.core.geometry import FloatArray, Pose
from segekf.utils import Entity

__all__: Final[tuple[str, ...]] = (
    "RobotParams",
    "WheelSpeeds",
    "input_noise_cov",
    "jacobian_noise",
    "jacobian_state",
    "propagate",
    "step",
)


@final
class RobotParams(Entity):
    """Wheel radius and axle length in meters, sample period in seconds."""

    wheel_radius: Annotated[float, Field(gt=0.0)] = 0.05
    axle_length: Annotated[float, Field(gt=0.0)] = 0.6
    sample_period: Annotated[float, Field(gt=0.0)] = 0.1


@final
@dataclass(frozen=True, slots=True)
class WheelSpeeds:
    omega_l: float
    omega_r: float

    def body_velocity(self: Self, /, params: RobotParams) -> tuple[float, float]:
        """Translational and rotational speed ``(v, omega)`` of the robot body."""
        return (
            0.5 * params.wheel_radius * (self.omega_l + self.omega_r),
            params.wheel_radius / params.axle_length * (self.omega_l - self.omega_r),
        )

    def scaled(self: Self, /, factor: float) -> "WheelSpeeds":
        return WheelSpeeds(self.omega_l * factor, self.omega_r * factor)


def propagate(pose: Pose, v: float, omega: float, sample_period: float, /) -> Pose:
    return Pose(
        pose.x + sample_period * v * math.cos(pose.theta),
        pose.y + sample_period * v * math.sin(pose.theta),
        pose.theta + sample_period * omega,
    )


def step(pose: Pose, speeds: WheelSpeeds, params: RobotParams, /) -> Pose:
    v, omega = speeds.body_velocity(params)
    return propagate(pose, v, omega, params.sample_period)


def jacobian_state(pose: Pose, speeds: WheelSpeeds, params: RobotParams, /) -> FloatArray:
    v: Final[float] = speeds.body_velocity(params)[0]
    reach: Final[float] = params.sample_period * v
    return np.array(
        ((1.0, 0.0, -reach * math.sin(pose.theta)), (0.0, 1.0, reach * math.cos(pose.theta)), (0.0, 0.0, 1.0))
    )


def jacobian_noise(pose: Pose, params: RobotParams, /) -> FloatArray:
    """Sensitivity of :func:`propagate` to additive disturbances on ``(v, omega)``."""
    ts: Final[float] = params.sample_period
    return np.array(((ts * math.cos(pose.theta), 0.0), (ts * math.sin(pose.theta), 0.0), (0.0, ts)))


def input_noise_cov(speeds: WheelSpeeds, delta: float, /) -> FloatArray:
    """Right wheel first."""
    if delta < 0.0:
        message: Final[str] = f"Input noise factor must be non-negative, got {delta}."
        raise ValueError(message)

    return np.diag((delta * speeds.omega_r**2, delta * speeds.omega_l**2))
