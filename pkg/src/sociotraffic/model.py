"""Macroscopic two-class model: driving costs, velocity law, flux and Jacobian.

All quantities are normalised (maximum velocity 1, jam density 1). The
state vector is ``eta = (rho1, u1, rho2, u2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConjugateDomainError, NonConvexError

MAIN = "main"
ROUTE = "route"

# starting penalty R(x0); held at zero throughout
STARTING_PENALTY = 0.0

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    junction: float = 1.0    # x_B; the main segment is [domain_start, junction]
    domain_start: float = 0.0
    domain_end: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0,1)")
        if not self.domain_start < self.junction <= self.domain_end:
            raise ValueError("need domain_start < junction <= domain_end")

    def region(self, x):
        """Region indicator: 1 on the main segment, 0 on the route segments."""
        return np.where(np.asarray(x) <= self.junction, 1, 0)


@dataclass(frozen=True)
class OperatingPoint:
    rho1: float
    u1: float
    rho2: float
    u2: float

    def __post_init__(self):
        if min(self.rho1, self.u1, self.rho2, self.u2) <= 0:
            raise ValueError("operating densities and velocities must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.rho1, self.u1, self.rho2, self.u2])

    @classmethod
    def from_sequence(cls, values) -> "OperatingPoint":
        return cls(*(float(v) for v in values))


@dataclass
class TrafficState:
    """Cell averages on a uniform grid; ``data`` has shape ``(4, ncells)``."""

    grid: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (4, len(self.grid)):
            raise ValueError("state data must have shape (4, len(grid))")
        if np.any(self.data[0] < 0) or np.any(self.data[2] < 0):
            raise ValueError("densities must be non-negative")

    rho1 = property(lambda self: self.data[0])
    u1 = property(lambda self: self.data[1])
    rho2 = property(lambda self: self.data[2])
    u2 = property(lambda self: self.data[3])

    @property
    def dx(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @classmethod
    def uniform(cls, grid, op: OperatingPoint) -> "TrafficState":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.repeat(op.as_array()[:, None], grid.size, axis=1))

    def copy(self) -> "TrafficState":
        return TrafficState(self.grid, self.data.copy())


@dataclass(frozen=True)
class CostGradientField:
    """Spatial gradient of the optimal driving cost per class."""

    dH1dx: np.ndarray
    dH2dx: np.ndarray

    @classmethod
    def equilibrium(cls, ncells: int) -> "CostGradientField":
        return cls(np.zeros(ncells), np.zeros(ncells))


def class_coefficients(alpha: float, region: str = MAIN):
    """Density coefficients (c1, c2) multiplying each class's own density."""
    if region == MAIN:
        return alpha, 1.0 - alpha
    if region == ROUTE:
        return 1.0, 1.0
    raise ValueError(f"unknown region {region!r}")


def cost_functional(u, rho_own, alpha: float, cls: int, region: str = MAIN):
    """Running cost: kinetic energy, efficiency, and same-class density penalty."""
    c = class_coefficients(alpha, region)[cls - 1]
    return 0.5 * u * u - u + c * u * rho_own


def quadratic_cost(c_rho: float) -> Callable[[float], float]:
    return lambda u: 0.5 * u * u - u + c_rho * u


def _bracket(f, x0, step, limit):
    a, b = x0, x0 + step
    fa, fb = f(a), f(b)
    if fb > fa:
        a, b, fa, fb = b, a, fb, fa
        step = -step
    c = b + step
    fc = f(c)
    while fc <= fb:
        if abs(c) > limit or not np.isfinite(fc):
            raise ConjugateDomainError(
                "objective keeps decreasing; slope lies outside the conjugate's domain")
        step *= 2.0
        a, fa, b, fb = b, fb, c, fc
        c = b + step
        fc = f(c)
    return (a, c) if a < c else (c, a)


def _check_convex(f, lo, hi, samples=17):
    x = np.linspace(lo, hi, samples)
    y = np.array([f(v) for v in x])
    second = y[:-2] - 2.0 * y[1:-1] + y[2:]
    scale = max(1.0, float(np.max(np.abs(y))))
    if np.any(second < -1e-9 * scale):
        raise NonConvexError("cost is not convex on the search bracket")


def legendre_fenchel(cost: Callable[[float], float], p: float, *,
                     x0: float = 0.5, step: float = 0.5, tol: float = 1e-10,
                     limit: float = 1e8):
    """Evaluate ``min_u cost(u) - u*p`` and its minimiser.

    Golden-section search on a downhill-expanded bracket, followed by one
    parabolic polish step (exact for quadratics, kept only if it lowers the
    objective). Returns ``(value, minimiser)``.
    """
    f = lambda u: cost(u) - u * p
    lo, hi = _bracket(f, x0, step, limit)
    _check_convex(f, lo, hi)

    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = f(d)
    u = 0.5 * (lo + hi)
    fu = f(u)

    h = 1e-4
    fm, fp = f(u - h), f(u + h)
    curv = fp - 2.0 * fu + fm
    if curv > 0:
        # Near the minimum f is flat to rounding, so the golden bracket is
        # only good to ~sqrt(eps); trust the local parabola inside the stencil.
        u_new = u - 0.5 * h * (fp - fm) / curv
        if abs(u_new - u) <= h:
            u, fu = u_new, f(u_new)
    return fu, u


def optimal_velocity(dHdx, d):
    """Velocity from the cost gradient and effective density, clamped at zero.

    With ``dHdx = 0`` this is the Greenshields line ``u = 1 - d``.
    """
    dHdx = np.asarray(dHdx, dtype=float)
    u_max = np.maximum(1.0 + dHdx, 0.0)
    out = np.clip(1.0 + dHdx - np.asarray(d, dtype=float), 0.0, u_max)
    return out[()] if out.ndim == 0 else out


def fundamental_diagram(dHdx_values, d_grid):
    """Rows ``(dHdx, d, u)`` over the product of both grids."""
    rows = []
    for g in dHdx_values:
        for d in d_grid:
            rows.append((float(g), float(d), float(optimal_velocity(g, d))))
    return rows


def flux(eta, alpha: float, region: str = MAIN):
    """Conservative flux of ``eta``; works on a 4-vector or a ``(4, n)`` array."""
    eta = np.asarray(eta, dtype=float)
    c1, c2 = class_coefficients(alpha, region)
    rho1, u1, rho2, u2 = eta
    return np.array([
        rho1 * u1,
        0.5 * u1 * u1 - c1 * rho1 * u1,
        rho2 * u2,
        0.5 * u2 * u2 - c2 * rho2 * u2,
    ])


def class_block(rho: float, u: float, c: float) -> np.ndarray:
    return np.array([[u, rho], [-c * u, u - c * rho]])


def jacobian(op, alpha: float, region: str = MAIN) -> np.ndarray:
    """Block-diagonal flux Jacobian at ``op`` (an OperatingPoint or any 4-vector)."""
    if isinstance(op, OperatingPoint):
        op = op.as_array()
    rho1, u1, rho2, u2 = (float(v) for v in op)
    c1, c2 = class_coefficients(alpha, region)
    jac = np.zeros((4, 4))
    jac[:2, :2] = class_block(rho1, u1, c1)
    jac[2:, 2:] = class_block(rho2, u2, c2)
    return jac
