"""Finite-volume time integration of the two-class model on a 1-D segment.

Cells are uniform over ``[start, end]``. Every characteristic speed is
negative near a strictly hyperbolic operating point, so the left end is an
outflow boundary (zero-gradient ghost) and the right end receives data from
the boundary coupling ``eta(right) = eta* + G (eta(left) - eta*)``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .analysis import check_hyperbolicity, is_strictly_hyperbolic, spectral_radius
from .errors import (CFLViolationError, JunctionBlockedError, NonFiniteStateError,
                     NonHyperbolicError)
from .model import MAIN, ROUTE, OperatingPoint, TrafficState, flux, jacobian

log = logging.getLogger(__name__)

NONLINEAR = "local-lax-friedrichs"
LINEARIZED = "upwind-linearized"
SCHEMES = (NONLINEAR, LINEARIZED)
PERIODIC = "periodic"

_CFL_SLACK = 1e-12


@dataclass
class Perturbation:
    shape: str = "gaussian-bump"          # or "sinusoid"
    amplitude: tuple = (0.01, 0.0, 0.01, 0.0)
    center: float = 0.5                   # fraction of the segment
    width: float = 0.1                    # fraction of the segment

    def __post_init__(self):
        if self.shape not in ("gaussian-bump", "sinusoid"):
            raise ValueError(f"unknown perturbation shape {self.shape!r}")
        if len(self.amplitude) != 4:
            raise ValueError("perturbation amplitude needs one entry per state component")
        if self.width <= 0:
            raise ValueError("perturbation width must be positive")

    def profile(self, grid, start, end):
        s = (np.asarray(grid) - start) / (end - start)
        if self.shape == "gaussian-bump":
            base = np.exp(-0.5 * ((s - self.center) / self.width) ** 2)
        else:
            base = np.sin(2.0 * np.pi * s)
        return np.asarray(self.amplitude, dtype=float)[:, None] * base[None, :]


@dataclass
class SolverConfig:
    operating_point: OperatingPoint
    cells: int = 200
    cfl: float = 0.9
    t_end: float = 50.0
    output_interval: float = 0.5
    scheme: str = NONLINEAR
    G_B: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))
    G_C: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))
    perturbation: Perturbation = field(default_factory=Perturbation)
    start: float = 0.0
    junction: float = 1.0
    boundary: str = "coupled"              # or "periodic"
    route_cells: int = 0                   # > 0 appends a route segment past the junction
    route_end: float = 2.0
    route_operating_point: Optional[OperatingPoint] = None

    def __post_init__(self):
        self.G_B = np.asarray(self.G_B, dtype=float)
        self.G_C = np.asarray(self.G_C, dtype=float)
        problems = []
        if not 0.0 < self.cfl < 1.0:
            problems.append("cfl must lie in (0, 1)")
        if self.cells < 16:
            problems.append("cells must be at least 16")
        if self.t_end <= 0 or self.output_interval <= 0:
            problems.append("t_end and output_interval must be positive")
        if self.scheme not in SCHEMES:
            problems.append(f"scheme must be one of {SCHEMES}")
        if self.G_B.shape != (4, 4) or self.G_C.shape != (4, 4):
            problems.append("boundary matrices must be 4x4")
        if self.boundary not in ("coupled", PERIODIC):
            problems.append("boundary must be 'coupled' or 'periodic'")
        if not self.start < self.junction:
            problems.append("start must lie left of the junction")
        if self.route_cells and (self.route_cells < 16 or self.route_end <= self.junction):
            problems.append("route segment needs >= 16 cells and route_end > junction")
        if self.route_cells and self.boundary == PERIODIC:
            problems.append("a route segment cannot be combined with periodic boundaries")
        eta0 = self.operating_point.as_array()[[0, 2]] - np.abs(
            np.asarray(self.perturbation.amplitude)[[0, 2]])
        if np.any(eta0 <= 0):
            problems.append("perturbation amplitude would make an initial density non-positive")
        if problems:
            raise ValueError("; ".join(problems))

    def grid(self) -> np.ndarray:
        return cell_centres(self.start, self.junction, self.cells)

    def route_grid(self) -> np.ndarray:
        return cell_centres(self.junction, self.route_end, self.route_cells)


@dataclass
class Trajectory:
    times: np.ndarray
    states: list                 # TrafficState per output time (main segment)
    norms: np.ndarray            # (len(times), 2): L2 deviation per class
    route_states: list = field(default_factory=list)
    floored: int = 0
    junction_residuals: list = field(default_factory=list)   # post-correction, per step


def cell_centres(start: float, end: float, n: int) -> np.ndarray:
    dx = (end - start) / n
    return start + dx * (np.arange(n) + 0.5)


def deviation_norms(state: TrafficState, op: OperatingPoint) -> np.ndarray:
    """L2 norm of ``eta - eta*`` over the segment, per class."""
    dev = state.data - op.as_array()[:, None]
    sq = dev ** 2 * state.dx
    return np.sqrt(np.array([sq[:2].sum(), sq[2:].sum()]))


def apply_boundary(state: TrafficState, G, reference=None) -> np.ndarray:
    """Pad ``state`` with one ghost cell per side, shape ``(4, n + 2)``.

    The downstream (right) ghost is ``ref + G (eta(left trace) - ref)``; the
    upstream ghost copies its neighbour. ``reference`` defaults to zero so
    ``G`` acts on the raw state; pass the operating point to act on deviations.
    """
    if isinstance(reference, OperatingPoint):
        reference = reference.as_array()
    ref = np.zeros(4) if reference is None else np.asarray(reference, dtype=float)
    G = np.asarray(G, dtype=float)
    data = state.data
    padded = np.empty((4, data.shape[1] + 2))
    padded[:, 1:-1] = data
    padded[:, 0] = data[:, 0]
    padded[:, -1] = ref + G @ (data[:, 0] - ref)
    return padded


def periodic_pad(state: TrafficState) -> np.ndarray:
    data = state.data
    return np.concatenate([data[:, -1:], data, data[:, :1]], axis=1)


def llf_fluxes(padded, alpha: float, region: str = MAIN) -> np.ndarray:
    """Local Lax-Friedrichs interface fluxes, shape ``(4, n + 1)``."""
    left, right = padded[:, :-1], padded[:, 1:]
    speed = np.maximum(spectral_radius(left, alpha, region),
                       spectral_radius(right, alpha, region))
    return 0.5 * (flux(left, alpha, region) + flux(right, alpha, region)) \
        - 0.5 * speed * (right - left)


def stable_dt(data, dx: float, alpha: float, cfl: float, region: str = MAIN) -> float:
    smax = float(np.max(spectral_radius(data, alpha, region)))
    return np.inf if smax == 0 else cfl * dx / smax


def _check_finite(data):
    if not np.all(np.isfinite(data)):
        raise NonFiniteStateError("state contains non-finite values")


def _floor_densities(data):
    neg = data[[0, 2]] < 0
    count = int(np.count_nonzero(neg))
    if count:
        data[[0, 2]] = np.where(neg, 0.0, data[[0, 2]])
    return count


def step_nonlinear(state: TrafficState, dt: float, alpha: float, ghosts=None, *,
                   region: str = MAIN, return_info: bool = False):
    """One local Lax-Friedrichs step of ``eta_t + Q(eta)_x = 0``.

    ``ghosts`` is either a padded ``(4, n + 2)`` array from
    :func:`apply_boundary` or ``"periodic"``; ``None`` means zero-gradient
    on both sides. Densities are floored at zero after the update.
    """
    _check_finite(state.data)
    padded = _pad(state, ghosts)
    dx = state.dx
    limit = stable_dt(padded, dx, alpha, 1.0, region)
    if dt > limit * (1.0 + _CFL_SLACK):
        raise CFLViolationError(f"dt={dt:.6g} exceeds the CFL limit {limit:.6g}")
    F = llf_fluxes(padded, alpha, region)
    new = state.data - dt / dx * (F[:, 1:] - F[:, :-1])
    _check_finite(new)
    floored = _floor_densities(new)
    out = TrafficState(state.grid, new)
    if return_info:
        return out, {"floored": floored, "left_flux": F[:, 0], "right_flux": F[:, -1]}
    return out


def _pad(state, ghosts):
    if ghosts is None:
        return np.concatenate([state.data[:, :1], state.data, state.data[:, -1:]], axis=1)
    if isinstance(ghosts, str):
        if ghosts != PERIODIC:
            raise ValueError(f"unknown ghost specification {ghosts!r}")
        return periodic_pad(state)
    ghosts = np.asarray(ghosts, dtype=float)
    if ghosts.shape != (4, state.data.shape[1] + 2):
        raise ValueError("padded state has the wrong shape")
    return ghosts


def characteristic_decomposition(jac):
    """Eigen-decomposition ``J = R diag(lam) R^-1`` of a strictly hyperbolic J."""
    jac = np.asarray(jac, dtype=float)
    if not is_strictly_hyperbolic(jac):
        raise NonHyperbolicError("Jacobian is not strictly hyperbolic")
    lam, R = np.linalg.eig(jac)
    lam, R = lam.real, R.real
    return lam, R, np.linalg.inv(R)


def step_linearized(state: TrafficState, dt: float, jac, ghosts=None, *,
                    decomposition=None) -> TrafficState:
    """One characteristic-upwind step of ``eta_t + J eta_x = 0`` with frozen J."""
    _check_finite(state.data)
    lam, R, R_inv = decomposition or characteristic_decomposition(jac)
    dx = state.dx
    smax = float(np.max(np.abs(lam)))
    if smax > 0 and dt > dx / smax * (1.0 + _CFL_SLACK):
        raise CFLViolationError(f"dt={dt:.6g} exceeds the CFL limit {dx / smax:.6g}")
    w = R_inv @ _pad(state, ghosts)
    nu = (dt / dx) * lam[:, None]
    core = w[:, 1:-1]
    fwd = w[:, 2:] - core
    bwd = core - w[:, :-2]
    w_new = core - np.where(nu < 0, nu * fwd, nu * bwd)
    new = R @ w_new
    _check_finite(new)
    return TrafficState(state.grid, new)


def couple_junction_fluxes(incoming, outgoing, alpha: float):
    """Rescale outgoing class fluxes so the junction conserves weighted flux.

    Enforces ``alpha q1_in + (1-alpha) q2_in = q1_out + q2_out``. Returns
    ``(scaled_outgoing, residual)`` with the residual taken before the
    correction.
    """
    q_in = alpha * incoming[0] + (1.0 - alpha) * incoming[1]
    out_total = outgoing[0] + outgoing[1]
    residual = q_in - out_total
    if out_total == 0.0:
        if q_in != 0.0:
            raise JunctionBlockedError(
                "junction blocked: no outgoing flux to carry the incoming flow")
        return np.zeros(2), float(residual)
    scale = q_in / out_total
    return np.array([scale * outgoing[0], scale * outgoing[1]]), float(residual)


def junction_flux(left_state, right_state, alpha: float):
    """Couple the class mass fluxes either side of the junction.

    Returns ``((incoming, outgoing), residual)`` where both are pairs of
    class fluxes ``rho_j u_j``.
    """
    left_state = np.asarray(left_state, dtype=float)
    right_state = np.asarray(right_state, dtype=float)
    incoming = np.array([left_state[0] * left_state[1], left_state[2] * left_state[3]])
    outgoing = np.array([right_state[0] * right_state[1], right_state[2] * right_state[3]])
    scaled, residual = couple_junction_fluxes(incoming, outgoing, alpha)
    return (incoming, scaled), residual


def junction_residual(incoming, outgoing, alpha: float) -> float:
    return float(alpha * incoming[0] + (1.0 - alpha) * incoming[1]
                 - outgoing[0] - outgoing[1])


def initial_state(config: SolverConfig) -> TrafficState:
    grid = config.grid()
    base = TrafficState.uniform(grid, config.operating_point)
    base.data += config.perturbation.profile(grid, config.start, config.junction)
    return base


def _output_times(config):
    n = int(round(config.t_end / config.output_interval))
    times = config.output_interval * np.arange(n + 1)
    if times[-1] < config.t_end - 1e-12:
        times = np.append(times, config.t_end)
    return times


def run_simulation(config: SolverConfig, alpha: float) -> Trajectory:
    """Integrate from the perturbed operating point to ``config.t_end``.

    Records the state and the per-class deviation norms at every output
    time. Route segments, when configured, receive the junction-coupled mass
    flux leaving the main segment.
    """
    op = config.operating_point
    hyperbolic, margins = check_hyperbolicity(op, alpha)
    if not hyperbolic:
        warnings.warn(f"operating point is not strictly hyperbolic at alpha={alpha} "
                      f"(margins {margins[0]:.4g}, {margins[1]:.4g})", RuntimeWarning)
    state = initial_state(config)
    route = None
    route_op = config.route_operating_point or op
    if config.route_cells:
        route = TrafficState.uniform(config.route_grid(), route_op)

    linear = config.scheme == LINEARIZED
    if linear:
        decomposition = characteristic_decomposition(jacobian(op, alpha))
        frozen_speed = float(np.max(np.abs(decomposition[0])))

    times = _output_times(config)
    traj = Trajectory(times, [state.copy()], [deviation_norms(state, op)],
                      [route.copy()] if route is not None else [])
    t = 0.0
    dx = state.dx
    for target in times[1:]:
        while t < target - 1e-12:
            ghosts = periodic_pad(state) if config.boundary == PERIODIC \
                else apply_boundary(state, config.G_B, op)
            if linear:
                dt = config.cfl * dx / frozen_speed
            else:
                dt = stable_dt(ghosts, dx, alpha, config.cfl)
                if route is not None:
                    dt = min(dt, stable_dt(apply_boundary(route, config.G_C, route_op),
                                           route.dx, alpha, config.cfl, ROUTE))
            dt = min(dt, target - t)
            if linear:
                new = step_linearized(state, dt, None, ghosts, decomposition=decomposition)
            else:
                new, info = step_nonlinear(state, dt, alpha, ghosts, return_info=True)
                traj.floored += info["floored"]
                if route is not None:
                    route = _step_route(route, dt, alpha, info["right_flux"],
                                        config.G_C, route_op, traj)
            state = new
            t += dt
        traj.states.append(state.copy())
        traj.norms.append(deviation_norms(state, op))
        if route is not None:
            traj.route_states.append(route.copy())
    traj.norms = np.array(traj.norms)
    if traj.floored:
        log.warning("density floored at zero in %d cell updates", traj.floored)
    return traj


def _step_route(route, dt, alpha, main_outflow, G_C, route_op, traj):
    padded = apply_boundary(route, G_C, route_op)
    F = llf_fluxes(padded, alpha, ROUTE)
    incoming = main_outflow[[0, 2]]
    scaled, _ = couple_junction_fluxes(incoming, F[[0, 2], 0], alpha)
    F[0, 0], F[2, 0] = scaled
    traj.junction_residuals.append(junction_residual(incoming, scaled, alpha))
    new = route.data - dt / route.dx * (F[:, 1:] - F[:, :-1])
    _check_finite(new)
    traj.floored += _floor_densities(new)
    return TrafficState(route.grid, new)
