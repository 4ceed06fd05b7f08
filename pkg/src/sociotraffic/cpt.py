"""Cumulative prospect theory valuation.

Outcomes are ranked, losses (at or below the reference point) are weighted
with the distorted cumulative distribution from the bottom and gains with
the distorted decumulative distribution from the top.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_TOL = 1e-12


@dataclass(frozen=True)
class CptParams:
    """Behavioural parameters of one decision maker.

    ``phi`` is the logit sensitivity; it lives here so a scenario carries a
    single behavioural block, but only the route-choice step reads it.
    """

    reference: float = 0.0
    beta_plus: float = 0.88
    beta_minus: float = 0.88
    lam: float = 2.25
    gamma: float = 0.65
    phi: float = 1.0

    def __post_init__(self):
        problems = []
        if not 0.0 < self.beta_plus <= 1.0:
            problems.append(f"beta_plus must lie in (0, 1], got {self.beta_plus}")
        if not 0.0 < self.beta_minus <= 1.0:
            problems.append(f"beta_minus must lie in (0, 1], got {self.beta_minus}")
        if not self.lam > 1.0:
            problems.append(f"lambda must exceed 1, got {self.lam}")
        if not 0.0 < self.gamma <= 1.0:
            problems.append(f"gamma must lie in (0, 1], got {self.gamma}")
        if not self.phi >= 0.0:
            problems.append(f"phi must be non-negative, got {self.phi}")
        if not np.isfinite(self.reference):
            problems.append("reference must be finite")
        if problems:
            raise ValueError("; ".join(problems))

    @classmethod
    def unchecked(cls, **kwargs) -> "CptParams":
        """Build parameters bypassing validation.

        Only meant for the risk-neutral reduction (lam = 1), which the
        behavioural constraints exclude but which is a useful reference.
        """
        obj = object.__new__(cls)
        fields = {f: getattr(cls, f) for f in cls.__dataclass_fields__}
        fields.update(kwargs)
        for key, value in fields.items():
            object.__setattr__(obj, key, value)
        return obj

    def to_dict(self) -> dict:
        return {
            "reference": self.reference,
            "beta_plus": self.beta_plus,
            "beta_minus": self.beta_minus,
            "lambda": self.lam,
            "gamma": self.gamma,
            "phi": self.phi,
        }


class Prospect:
    """Ranked outcome/probability pairs.

    Values must be nondecreasing and probabilities must sum to one. Use
    :meth:`from_pairs` to build one from unsorted data.
    """

    def __init__(self, values, probabilities):
        values = np.asarray(values, dtype=float).ravel()
        probabilities = np.asarray(probabilities, dtype=float).ravel()
        if values.shape != probabilities.shape:
            raise ValueError("values and probabilities must have the same length")
        if values.size == 0:
            raise ValueError("a prospect needs at least one outcome")
        if np.any(np.diff(values) < 0):
            raise ValueError("outcome values must be nondecreasing")
        if np.any(probabilities < 0) or np.any(probabilities > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(probabilities.sum() - 1.0) > PROB_TOL:
            raise ValueError(
                f"probabilities must sum to 1 (got {probabilities.sum()!r})")
        self.values = values
        self.probabilities = probabilities

    @classmethod
    def from_pairs(cls, pairs) -> "Prospect":
        pairs = sorted((float(z), float(p)) for z, p in pairs)
        return cls([z for z, _ in pairs], [p for _, p in pairs])

    def __len__(self):
        return self.values.size

    def loss_count(self, reference: float) -> int:
        """Number of outcomes at or below the reference point."""
        return int(np.searchsorted(self.values, reference, side="right"))

    def __repr__(self):
        pairs = ", ".join(f"({z:g}, {p:g})"
                          for z, p in zip(self.values, self.probabilities))
        return f"Prospect([{pairs}])"


def value_function(z, params: CptParams):
    """Reference-dependent value: concave over gains, convex and steeper over losses."""
    z = np.asarray(z, dtype=float)
    gain = np.clip(z - params.reference, 0.0, None)
    loss = np.clip(params.reference - z, 0.0, None)
    out = np.where(z > params.reference,
                   gain ** params.beta_plus,
                   -params.lam * loss ** params.beta_minus)
    return out[()] if out.ndim == 0 else out


def prelec_weight(p, gamma: float):
    """Prelec probability weighting ``exp(-(-ln p)**gamma)`` with w(0) = 0."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or np.any(p > 1) or np.any(np.isnan(p)):
        raise ValueError("probability must lie in [0, 1]")
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    with np.errstate(divide="ignore"):
        out = np.where(p > 0, np.exp(-(-np.log(np.where(p > 0, p, 1.0))) ** gamma), 0.0)
    return out[()] if out.ndim == 0 else out


def _cumulative_weights(probabilities, gamma, whole=False):
    # Clipping guards against the running sum creeping past 1 by an ulp.
    cum = np.clip(np.cumsum(probabilities), 0.0, 1.0)
    if whole and cum.size:
        # w has infinite slope at 1, so an ulp of rounding here costs ~1e-10
        cum[-1] = 1.0
    w = prelec_weight(cum, gamma)
    return np.diff(w, prepend=0.0)


def decision_weights(prospect: Prospect, gamma: float, reference: float = 0.0):
    """Return ``(loss_weights, gain_weights)`` for a ranked prospect.

    Loss weights run over the ``g`` lowest outcomes in ascending order, gain
    weights over the remaining ones, also in ascending order of outcome.
    """
    g = prospect.loss_count(reference)
    p = prospect.probabilities
    loss_w = _cumulative_weights(p[:g], gamma, whole=g == len(p))
    # Gains use decumulative probabilities, accumulated from the best outcome.
    gain_w = _cumulative_weights(p[g:][::-1], gamma, whole=g == 0)[::-1]
    return loss_w, gain_w


def cpt_value(prospect: Prospect, params: CptParams) -> float:
    loss_w, gain_w = decision_weights(prospect, params.gamma, params.reference)
    weights = np.concatenate([loss_w, gain_w])
    return float(np.dot(weights, value_function(prospect.values, params)))


def cpt_value_empirical(samples, params: CptParams) -> float:
    """CPT value of the empirical distribution of ``samples`` (mass 1/N each)."""
    samples = np.sort(np.asarray(samples, dtype=float).ravel())
    if samples.size == 0:
        raise ValueError("cpt_value_empirical needs at least one sample")
    n = samples.size
    # Prospect validation would reject 1/N rounding residue for large N, so
    # the weights are formed directly from the exact cumulative k/N.
    g = int(np.searchsorted(samples, params.reference, side="right"))
    ranks = np.arange(n + 1) / n
    w_loss = prelec_weight(ranks[: g + 1], params.gamma)
    w_gain = prelec_weight(ranks[: n - g + 1], params.gamma)
    weights = np.concatenate([np.diff(w_loss), np.diff(w_gain)[::-1]])
    return float(np.dot(weights, value_function(samples, params)))
