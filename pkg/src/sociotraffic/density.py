"""Gaussian kernel smoothing of vehicle positions into a density field."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT_2PI = np.sqrt(2.0 * np.pi)
MARGIN_BANDWIDTHS = 6.0


@dataclass(frozen=True)
class DensityField:
    grid: np.ndarray
    values: np.ndarray
    bandwidth: float

    @property
    def dx(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def mass(self) -> float:
        return float(np.trapezoid(self.values, self.grid))


def uniform_grid(x_min: float, x_max: float, num: int) -> np.ndarray:
    return np.linspace(x_min, x_max, num)


def gaussian_kernel(x, a: float):
    if not a > 0:
        raise ValueError("bandwidth must be positive")
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * (x / a) ** 2) / (SQRT_2PI * a)


def kde_density(positions, a: float, grid) -> DensityField:
    """Average of Gaussian kernels of width ``a`` centred on each position.

    The grid has to extend at least six bandwidths past every position so
    that the field still integrates to one; no boundary correction is made.
    """
    positions = np.asarray(positions, dtype=float).ravel()
    grid = np.asarray(grid, dtype=float)
    if positions.size == 0:
        raise ValueError("kde_density needs at least one position")
    if not a > 0:
        raise ValueError("bandwidth must be positive")
    margin = MARGIN_BANDWIDTHS * a
    slack = margin * (1.0 - 1e-9)    # a margin of exactly 6a may lose an ulp
    if positions.min() - grid[0] < slack or grid[-1] - positions.max() < slack:
        raise ValueError(
            f"grid [{grid[0]:g}, {grid[-1]:g}] does not cover positions with a "
            f"{MARGIN_BANDWIDTHS:g}-bandwidth margin ({margin:g})")
    values = gaussian_kernel(grid[:, None] - positions[None, :], a).mean(axis=1)
    return DensityField(grid, values, float(a))


def mix_densities(rho1: DensityField, rho2: DensityField, alpha: float) -> DensityField:
    """Population-weighted effective density ``alpha*rho1 + (1-alpha)*rho2``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if rho1.grid.shape != rho2.grid.shape or not np.array_equal(rho1.grid, rho2.grid):
        raise ValueError("density fields live on different grids")
    values = alpha * rho1.values + (1.0 - alpha) * rho2.values
    # the mixture has no single bandwidth; keep the wider one for reference
    return DensityField(rho1.grid, values, max(rho1.bandwidth, rho2.bandwidth))
