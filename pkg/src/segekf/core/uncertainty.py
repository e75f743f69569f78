"""Closed-form covariance of fitted line parameters and the stacked measurement covariance.

All points share the same Cartesian noise. The per-line result keeps its off-diagonal term, while the stacked matrix
used by the filter is diagonal.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Final, Self, final

import numpy as np

from segekf.core.errors import DegenerateGeometryError
from segekf.core.geometry import FloatArray, NormalLine, Point2, as_xy

__all__: Final[tuple[str, ...]] = ("LineCovariance", "PointNoise", "assemble_R", "line_covariance")

# Below this the point cloud is isotropic and has no line direction.
_DEGENERATE_SPREAD: Final[float] = 1e-18
_MIN_POINTS: Final[int] = 3


@final
@dataclass(frozen=True, slots=True)
class PointNoise:
    sigma_xx2: float
    sigma_yy2: float
    sigma_xy2: float = 0.0

    def __post_init__(self: Self, /) -> None:
        if self.sigma_xx2 < 0.0 or self.sigma_yy2 < 0.0:
            message: Final[str] = f"Point variances must be non-negative, got {self.sigma_xx2}, {self.sigma_yy2}."
            raise ValueError(message)

        if abs(self.sigma_xy2) > math.sqrt(self.sigma_xx2 * self.sigma_yy2) + 1e-15:
            reason: Final[str] = f"Covariance {self.sigma_xy2} exceeds the product of deviations."
            raise ValueError(reason)

    @classmethod
    def isotropic(cls: type[Self], /, sigma: float) -> Self:
        return cls(sigma * sigma, sigma * sigma)


@final
@dataclass(frozen=True, slots=True)
class LineCovariance:
    var_rho: float
    var_psi: float
    cov: float

    def to_matrix(self: Self, /) -> FloatArray:
        """Full 2x2 in ``(rho, psi)`` order."""
        return np.array(((self.var_rho, self.cov), (self.cov, self.var_psi)))


def line_covariance(
    inliers: Sequence[Point2] | FloatArray, line: NormalLine, noise: PointNoise, /
) -> LineCovariance:
    """Covariance of ``(rho, psi)`` for a line fitted to ``inliers``.

    Raises:
        DegenerateGeometryError: fewer than three points, or a cloud without a dominant direction.
    """
    xy: Final[FloatArray] = as_xy(inliers)
    count: Final[int] = len(xy)
    if count < _MIN_POINTS:
        raise DegenerateGeometryError(count, 0.0)

    x_mean: Final[float] = float(xy[:, 0].mean())
    y_mean: Final[float] = float(xy[:, 1].mean())
    dx: Final[FloatArray] = xy[:, 0] - x_mean
    dy: Final[FloatArray] = xy[:, 1] - y_mean
    a: Final[float] = float(np.sum(dx * dx))
    b: Final[float] = 2.0 * float(np.sum(dx * dy))
    c: Final[float] = float(np.sum(dy * dy))
    spread: Final[float] = (a - c) ** 2 + b**2
    if spread < _DEGENERATE_SPREAD:
        raise DegenerateGeometryError(count, spread)

    s: Final[float] = (a * noise.sigma_yy2 - b * noise.sigma_xy2 + c * noise.sigma_xx2) / spread
    lever: Final[float] = y_mean * math.cos(line.psi) - x_mean * math.sin(line.psi)
    phi: Final[float] = line.psi + 0.5 * math.pi
    mean_term: Final[float] = (
        noise.sigma_yy2 * math.cos(phi) ** 2
        + noise.sigma_xx2 * math.sin(phi) ** 2
        - 2.0 * noise.sigma_xy2 * math.sin(phi) * math.cos(phi)
    ) / count
    return LineCovariance(var_rho=s * lever * lever + mean_term, var_psi=s, cov=-s * lever)


def assemble_R(lines: Sequence[LineCovariance], camera_var: float | None, /) -> FloatArray:  # noqa: N802
    """Block-diagonal measurement covariance; the heading entry is omitted when ``camera_var`` is ``None``."""
    diagonal: Final[list[float]] = [value for line in lines for value in (line.var_rho, line.var_psi)]
    if camera_var is not None:
        diagonal.append(camera_var)

    return np.diag(np.array(diagonal, dtype=np.float64)).reshape(len(diagonal), len(diagonal))
