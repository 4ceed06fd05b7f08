"""Spectral and stability characterisation of the linearised model."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .model import OperatingPoint, class_coefficients, jacobian

DEFAULT_MU_GRID = np.logspace(-4, 0, 65)[:-1]


class BlockSpectrum(NamedTuple):
    """Eigenvalues of the two 2x2 class blocks.

    ``values`` is real when both blocks are strictly hyperbolic and complex
    otherwise; ``hyperbolic`` is the explicit marker.
    """

    values: np.ndarray
    discriminants: np.ndarray
    hyperbolic: bool


def _block_roots(rho, u, c):
    c_rho = c * rho
    delta = 1.0 - 4.0 * u / c_rho
    centre = 2.0 * u - c_rho
    root = np.sqrt(complex(delta)) if delta < 0 else np.sqrt(delta)
    return 0.5 * (centre + c_rho * root), 0.5 * (centre - c_rho * root), delta


def block_eigenvalues(op: OperatingPoint, alpha: float) -> BlockSpectrum:
    """Roots of each block's characteristic polynomial.

    Per class the block has trace ``2u - c*rho`` and determinant ``u**2``,
    so the roots are ``((2u - c rho) +- c rho sqrt(1 - 4u/(c rho))) / 2``.
    """
    c1, c2 = class_coefficients(alpha)
    l1, l2, d1 = _block_roots(op.rho1, op.u1, c1)
    l3, l4, d2 = _block_roots(op.rho2, op.u2, c2)
    hyperbolic = d1 > 0 and d2 > 0
    values = np.array([l1, l2, l3, l4])
    if hyperbolic:
        values = values.real.astype(float)
    return BlockSpectrum(values, np.array([d1, d2]), hyperbolic)


def hyperbolicity_margins(op: OperatingPoint, alpha: float) -> np.ndarray:
    c1, c2 = class_coefficients(alpha)
    return np.array([c1 - 4.0 * op.u1 / op.rho1, c2 - 4.0 * op.u2 / op.rho2])


def check_hyperbolicity(op: OperatingPoint, alpha: float):
    """Return ``(hyperbolic, margins)``; strict inequality on both margins."""
    margins = hyperbolicity_margins(op, alpha)
    hyperbolic = bool(np.all(margins > 0))
    spectrum = block_eigenvalues(op, alpha)
    if hyperbolic != spectrum.hyperbolic:
        # only reachable through rounding exactly at the boundary
        hyperbolic = False
    return hyperbolic, margins


def spectral_radius(eta, alpha: float, region: str = "main"):
    """Largest eigenvalue modulus of the flux Jacobian, cell by cell.

    ``eta`` has shape ``(4, n)``. Complex pairs have modulus ``|u|`` since the
    block determinant is ``u**2``.
    """
    eta = np.asarray(eta, dtype=float)
    c1, c2 = class_coefficients(alpha, region)
    out = None
    for rho, u, c in ((eta[0], eta[1], c1), (eta[2], eta[3], c2)):
        trace = 2.0 * u - c * rho
        disc = trace * trace - 4.0 * u * u
        real_case = 0.5 * (np.abs(trace) + np.sqrt(np.clip(disc, 0.0, None)))
        r = np.where(disc >= 0, real_case, np.abs(u))
        out = r if out is None else np.maximum(out, r)
    return out


def is_strictly_hyperbolic(jac, rtol: float = 1e-12) -> bool:
    vals = np.linalg.eigvals(np.asarray(jac, dtype=float))
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.any(np.abs(vals.imag) > rtol * scale):
        return False
    real = np.sort(vals.real)
    return bool(np.all(np.diff(real) > rtol * scale))


@dataclass
class LyapunovCertificate:
    """Result of the boundary-certificate scan over ``mu``.

    ``positive_definite``/``negative_definite`` use the quadratic-form sense
    (symmetric part). ``positive_spectrum``/``negative_spectrum`` only ask
    for the real parts of the eigenvalues to share a sign, which is weaker
    for non-symmetric matrices.
    """

    mu: Optional[float]
    matrix: np.ndarray
    positive_definite: bool
    negative_definite: bool
    mu_negative: Optional[float]
    positive_spectrum: bool = False
    negative_spectrum: bool = False
    # rows: (mu, min_eig_sym, max_eig_sym, pos_def, neg_def, min_re_eig, max_re_eig)
    table: list = field(default_factory=list)


def certificate_matrix(jac, G_B, a, b, mu):
    jac = np.asarray(jac, dtype=float)
    G_B = np.asarray(G_B, dtype=float)
    return jac - G_B.T @ jac @ G_B * np.exp(mu * (a - b))


def lyapunov_certificate(jac, G_B, a: float, b: float, mu_grid=None) -> LyapunovCertificate:
    """Scan ``mu`` for definiteness of ``J - G_B^T J G_B exp(mu (a - b))``.

    Both signs are reported, in the quadratic-form and in the spectral sense.
    """
    if not a < b:
        raise ValueError("need a < b")
    mu_grid = DEFAULT_MU_GRID if mu_grid is None else np.asarray(mu_grid, dtype=float)
    if np.any(mu_grid <= 0):
        raise ValueError("mu grid must be positive")
    table = []
    mu_pos = mu_neg = None
    pos_spec = neg_spec = False
    for mu in mu_grid:
        m = certificate_matrix(jac, G_B, a, b, mu)
        sym = 0.5 * (m + m.T)
        eig = np.linalg.eigvalsh(sym)
        re = np.linalg.eigvals(m).real
        pos, neg = bool(eig[0] > 0), bool(eig[-1] < 0)
        pos_spec |= bool(np.all(re > 0))
        neg_spec |= bool(np.all(re < 0))
        table.append((float(mu), float(eig[0]), float(eig[-1]), pos, neg,
                      float(re.min()), float(re.max())))
        if pos and mu_pos is None:
            mu_pos = float(mu)
        if neg and mu_neg is None:
            mu_neg = float(mu)
    shown = mu_pos if mu_pos is not None else (mu_neg if mu_neg is not None else float(mu_grid[0]))
    return LyapunovCertificate(
        mu=mu_pos,
        matrix=certificate_matrix(jac, G_B, a, b, shown),
        positive_definite=mu_pos is not None,
        negative_definite=mu_neg is not None,
        mu_negative=mu_neg,
        positive_spectrum=pos_spec,
        negative_spectrum=neg_spec,
        table=table,
    )


class DecayFit(NamedTuple):
    epsilon: float
    prefactor: float
    r_squared: float
    degenerate: bool = False


def fit_decay(times, norms, tail_fraction: float = 0.5,
              floor: Optional[float] = None) -> DecayFit:
    """Fit ``norm(t) ~ M norm(0) exp(-epsilon t)`` on the tail of a series.

    Least squares on ``log norm``; ``prefactor`` is ``exp(intercept)/norm(0)``.
    Constant data gives ``epsilon = 0`` with ``degenerate=True`` and a NaN
    ``r_squared``. With ``floor`` set, the series is cut at the first sample
    below ``floor * norm(0)`` so round-off noise does not enter the fit.
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")
    if floor is not None and norms.size and norms[0] > 0:
        below = np.flatnonzero(norms <= floor * norms[0])
        if below.size:
            times, norms = times[:below[0]], norms[:below[0]]
    n_tail = int(np.ceil(tail_fraction * times.size))
    if n_tail < 10:
        raise ValueError(f"need at least 10 samples in the tail window, got {n_tail}")
    t, y = times[-n_tail:], norms[-n_tail:]
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("norms must be positive and finite on the fitting window")
    if norms[0] <= 0:
        raise ValueError("initial norm must be positive")
    log_y = np.log(y)
    slope, intercept = np.polyfit(t, log_y, 1)
    ss_tot = float(np.sum((log_y - log_y.mean()) ** 2))
    if ss_tot <= 1e-24 * max(1.0, float(np.sum(log_y ** 2))):
        return DecayFit(0.0, float(y.mean() / norms[0]), float("nan"), True)
    ss_res = float(np.sum((log_y - (slope * t + intercept)) ** 2))
    return DecayFit(float(-slope), float(np.exp(intercept) / norms[0]),
                    1.0 - ss_res / ss_tot)


def lyapunov_functional(deviation, grid, mu: float) -> float:
    """Exponentially weighted energy ``0.5 * int exp(-mu x) |E(x)|^2 dx``.

    ``deviation`` has shape ``(4, n)`` on cell centres ``grid``.
    """
    deviation = np.asarray(deviation, dtype=float)
    grid = np.asarray(grid, dtype=float)
    dx = grid[1] - grid[0]
    return float(0.5 * np.sum(np.exp(-mu * grid) * np.sum(deviation ** 2, axis=0)) * dx)


@dataclass
class StabilityReport:
    alpha: float
    operating_point: OperatingPoint
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    discriminants: np.ndarray
    hyperbolic: bool
    margins: np.ndarray
    certificate: LyapunovCertificate
    decay: Optional[dict] = None   # class label -> DecayFit

    def to_text(self) -> str:
        op = self.operating_point
        lines = [
            f"alpha: {self.alpha:.6g}",
            f"operating point: rho1={op.rho1:.6g} u1={op.u1:.6g} "
            f"rho2={op.rho2:.6g} u2={op.u2:.6g}",
            "jacobian:",
        ]
        lines += ["  " + " ".join(f"{v: .6f}" for v in row) for row in self.jacobian]
        lines.append("eigenvalues: " + ", ".join(_fmt(v) for v in self.eigenvalues))
        lines.append("discriminants: " + ", ".join(f"{d:.6f}" for d in self.discriminants))
        lines.append(f"strictly hyperbolic: {self.hyperbolic}")
        lines.append("margins: " + ", ".join(f"{m:.6f}" for m in self.margins))
        cert = self.certificate
        lines.append(f"certificate positive definite: {cert.positive_definite}"
                     + (f" (mu={cert.mu:.6g})" if cert.mu is not None else ""))
        lines.append(f"certificate negative definite: {cert.negative_definite}"
                     + (f" (mu={cert.mu_negative:.6g})" if cert.mu_negative is not None else ""))
        lines.append(f"certificate spectrum positive: {cert.positive_spectrum}, "
                     f"negative: {cert.negative_spectrum}")
        for label, fit in (self.decay or {}).items():
            lines.append(f"decay {label}: epsilon={fit.epsilon:.6g} "
                         f"M={fit.prefactor:.6g} r2={fit.r_squared:.6g}")
        return "\n".join(lines) + "\n"

    def csv_row(self) -> dict:
        op = self.operating_point
        row = {"alpha": self.alpha, "rho1": op.rho1, "u1": op.u1,
               "rho2": op.rho2, "u2": op.u2}
        for i, v in enumerate(self.eigenvalues, start=1):
            row[f"lambda{i}"] = _fmt(v)
        row["margin1"], row["margin2"] = (float(m) for m in self.margins)
        row["hyperbolic"] = int(self.hyperbolic)
        row["cert_pos_def"] = int(self.certificate.positive_definite)
        row["cert_neg_def"] = int(self.certificate.negative_definite)
        row["cert_pos_spectrum"] = int(self.certificate.positive_spectrum)
        row["cert_neg_spectrum"] = int(self.certificate.negative_spectrum)
        for label, fit in (self.decay or {}).items():
            row[f"epsilon_{label}"] = fit.epsilon
        return row


def _fmt(v) -> str:
    v = complex(v)
    if v.imag == 0:
        return f"{v.real:.10g}"
    return f"{v.real:.10g}{v.imag:+.10g}j"


def stability_report(op: OperatingPoint, alpha: float, G_B=None, a: float = 0.0,
                     b: float = 1.0, mu_grid=None) -> StabilityReport:
    jac = jacobian(op, alpha)
    spectrum = block_eigenvalues(op, alpha)
    hyperbolic, margins = check_hyperbolicity(op, alpha)
    G_B = np.zeros((4, 4)) if G_B is None else np.asarray(G_B, dtype=float)
    cert = lyapunov_certificate(jac, G_B, a, b, mu_grid)
    return StabilityReport(alpha, op, jac, spectrum.values, spectrum.discriminants,
                           hyperbolic, margins, cert)
