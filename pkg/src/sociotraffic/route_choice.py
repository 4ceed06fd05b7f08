"""Two-route choice driven by traffic alerts and CPT-valued travel utility.

Every vehicle sees the same alert vector. Vehicles differ only through
their own travel-time draws, which are turned into a CPT value per route,
then into logit probabilities, then into a hard argmax choice.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .cpt import CptParams, cpt_value_empirical
from .errors import DegenerateSplitError

ROUTES = (1, 2)


@dataclass(frozen=True)
class Alert:
    signal: int
    trust: float


@dataclass(frozen=True)
class TravelTimeLaw:
    """Normal law truncated to ``[lower, upper]``."""

    mean: float
    std: float
    lower: float
    upper: float

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError(f"travel-time std must be positive, got {self.std}")
        if not self.lower < self.upper:
            raise ValueError("travel-time lower bound must be below upper bound")

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-CDF sampling; stays inside the bounds even for tiny std."""
        a = ndtr((self.lower - self.mean) / self.std)
        b = ndtr((self.upper - self.mean) / self.std)
        u = rng.uniform(a, b, size=size)
        draws = self.mean + self.std * ndtri(u)
        return np.clip(draws, self.lower, self.upper)


def alerts_from_poisson(rates: Sequence[float], trusts: Sequence[float],
                        rng: np.random.Generator) -> list[Alert]:
    """Binary alerts: S_i = 1 when at least one arrival occurs in a unit window."""
    rates = np.asarray(rates, dtype=float)
    hits = rng.random(rates.size) < 1.0 - np.exp(-rates)
    return [Alert(int(s), float(a)) for s, a in zip(hits, trusts)]


@dataclass(frozen=True)
class SocialScenario:
    num_vehicles: int
    alerts: tuple
    travel_time: tuple   # one TravelTimeLaw per route
    k1: float
    k2: tuple            # one convenience constant per route
    cpt: CptParams = field(default_factory=CptParams)
    rng_seed: int = 0
    samples_per_vehicle: int = 256

    def __post_init__(self):
        problems = []
        if int(self.num_vehicles) != self.num_vehicles or self.num_vehicles < 2:
            problems.append("num_vehicles must be an integer >= 2")
        if self.samples_per_vehicle < 1:
            problems.append("samples_per_vehicle must be >= 1")
        for i, alert in enumerate(self.alerts):
            if alert.signal not in (0, 1):
                problems.append(f"alerts[{i}].signal must be 0 or 1")
        if len(self.travel_time) != 2 or len(self.k2) != 2:
            problems.append("travel_time and k2 need exactly one entry per route")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def alert_term(self) -> float:
        return float(sum(a.trust * a.signal for a in self.alerts))

    def vehicle_rng(self, vehicle: int) -> np.random.Generator:
        # Substream keyed on (seed, vehicle) so results do not depend on
        # the order vehicles are processed in.
        return np.random.default_rng([self.rng_seed, vehicle])


@dataclass(frozen=True)
class RouteChoiceOutcome:
    m1: int
    m2: int
    alpha: float
    kappa: float
    utilities: np.ndarray = field(repr=False)   # (num_vehicles, 2) CPT values
    choices: np.ndarray = field(repr=False)     # route id per vehicle


def sample_route_utility(scenario: SocialScenario, route: int,
                         rng: np.random.Generator, size=None):
    """Draw Z = sum(a_i S_i) + k1 T + k2 for one route."""
    idx = ROUTES.index(route)
    t = scenario.travel_time[idx].sample(rng, size=size)
    return scenario.alert_term + scenario.k1 * t + scenario.k2[idx]


def route_probabilities(u1: float, u2: float, phi: float):
    """Binary logit probabilities, evaluated without overflow."""
    if phi < 0:
        raise ValueError("phi must be non-negative")
    z = phi * (u2 - u1)
    # 1 / (1 + e^z) via the logistic on -z, stable for large |z|
    if z >= 0:
        ez = np.exp(-z)
        p1 = ez / (1.0 + ez)
    else:
        p1 = 1.0 / (1.0 + np.exp(z))
    p1 = float(p1)
    return p1, 1.0 - p1


def compute_alpha(m1: int, m2: int) -> float:
    if m1 < 1 or m2 < 1:
        raise DegenerateSplitError(
            f"degenerate route split (M1={m1}, M2={m2}); alpha must lie in (0, 1)",
            m1, m2)
    return m1 / (m1 + m2)


def vehicle_utilities(scenario: SocialScenario) -> np.ndarray:
    """CPT value of each route for each vehicle, shape ``(num_vehicles, 2)``."""
    n = scenario.samples_per_vehicle
    out = np.empty((scenario.num_vehicles, 2))
    for k in range(scenario.num_vehicles):
        rng = scenario.vehicle_rng(k)
        for j, route in enumerate(ROUTES):
            draws = sample_route_utility(scenario, route, rng, size=n)
            out[k, j] = cpt_value_empirical(draws, scenario.cpt)
    return out


def choose_routes(scenario: SocialScenario) -> RouteChoiceOutcome:
    utilities = vehicle_utilities(scenario)
    phi = scenario.cpt.phi
    choices = np.empty(scenario.num_vehicles, dtype=int)
    for k, (u1, u2) in enumerate(utilities):
        p1, p2 = route_probabilities(u1, u2, phi)
        # ties go to route 1
        choices[k] = 1 if p1 >= p2 else 2
    m1 = int(np.count_nonzero(choices == 1))
    m2 = scenario.num_vehicles - m1
    alpha = compute_alpha(m1, m2)
    return RouteChoiceOutcome(m1, m2, alpha, alpha / (1.0 - alpha),
                              utilities, choices)
