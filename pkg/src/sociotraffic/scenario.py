"""JSON scenario files: parsing, validation and serialisation."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .cpt import CptParams
from .errors import ScenarioParseError, ScenarioValidationError
from .model import OperatingPoint
from .route_choice import Alert, SocialScenario, TravelTimeLaw, alerts_from_poisson
from .solver import SCHEMES, Perturbation, SolverConfig

SCHEMA_VERSION = 1

DEFAULT_FD_SLOPES = (-0.2, 0.0, 0.2)


@dataclass
class Scenario:
    name: str
    operating_point: OperatingPoint
    solver: SolverConfig
    social: Optional[SocialScenario] = None
    alpha_override: Optional[float] = None
    domain_start: float = 0.0
    junction: float = 1.0
    domain_end: float = 1.0
    outputs: str = "out"
    seed: int = 0
    fd_slopes: tuple = DEFAULT_FD_SLOPES
    mu_grid: Optional[tuple] = None
    tail_fraction: float = 0.5
    raw: dict = field(default_factory=dict, repr=False, compare=False)


def _join(path, key):
    return f"{path}.{key}" if path else key


class _Collector:
    def __init__(self):
        self.problems = []

    def add(self, path, message):
        self.problems.append(f"{path}: {message}")

    def number(self, section, key, path, default=None, required=False):
        if key not in section:
            if required:
                self.add(_join(path, key), "is required")
            return default
        value = section[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.add(_join(path, key), f"must be a number, got {value!r}")
            return default
        if not np.isfinite(value):
            self.add(_join(path, key), "must be finite")
            return default
        return value

    def integer(self, section, key, path, default=None, required=False):
        value = self.number(section, key, path, default, required)
        if value is not None and int(value) != value:
            self.add(_join(path, key), f"must be an integer, got {value!r}")
            return default
        return None if value is None else int(value)

    def mapping(self, data, key, path, required=False):
        if key not in data or data[key] is None:
            if required:
                self.add(_join(path, key), "is required")
            return None
        value = data[key]
        if not isinstance(value, dict):
            self.add(_join(path, key), "must be an object")
            return None
        return value

    def matrix(self, section, key, path):
        if key not in section or section[key] is None:
            return np.zeros((4, 4))
        try:
            m = np.asarray(section[key], dtype=float)
        except (TypeError, ValueError):
            self.add(_join(path, key), "must be a 4x4 numeric matrix")
            return np.zeros((4, 4))
        if m.shape != (4, 4):
            self.add(_join(path, key), f"must be 4x4, got shape {m.shape}")
            return np.zeros((4, 4))
        return m

    def build(self, path, factory, *args, **kwargs):
        try:
            return factory(*args, **kwargs)
        except (ValueError, TypeError) as exc:
            self.add(path, str(exc))
            return None


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioParseError(f"{path}: cannot read scenario file ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{path}: top level must be a JSON object")
    return data


def parse_scenario(path, seed: Optional[int] = None) -> Scenario:
    """Read and fully validate a scenario file.

    Every problem found is reported in one :class:`ScenarioValidationError`,
    each prefixed with the dotted path of the offending field.
    """
    return scenario_from_dict(load_json(path), seed=seed)


def _parse_social(c: _Collector, social: dict, seed: int):
    path = "social"
    n0 = len(c.problems)
    cpt_raw = c.mapping(social, "cpt", path) or {}
    cpt_kwargs = {}
    for key, attr in (("reference", "reference"), ("beta_plus", "beta_plus"),
                      ("beta_minus", "beta_minus"), ("lambda", "lam"),
                      ("gamma", "gamma"), ("phi", "phi")):
        v = c.number(cpt_raw, key, f"{path}.cpt")
        if v is not None:
            cpt_kwargs[attr] = float(v)
    cpt = c.build(f"{path}.cpt", CptParams, **cpt_kwargs)

    alerts = []
    if "alerts" in social:
        if not isinstance(social["alerts"], list):
            c.add(f"{path}.alerts", "must be a list")
        else:
            for i, item in enumerate(social["alerts"]):
                p = f"{path}.alerts[{i}]"
                if not isinstance(item, dict):
                    c.add(p, "must be an object with signal and trust")
                    continue
                s = c.integer(item, "signal", p, required=True)
                a = c.number(item, "trust", p, required=True)
                if s is not None and s not in (0, 1):
                    c.add(f"{p}.signal", "must be 0 or 1")
                elif s is not None and a is not None:
                    alerts.append(Alert(s, float(a)))
    elif "alert_rates" in social:
        rates = social.get("alert_rates")
        trusts = social.get("alert_trusts")
        if not isinstance(rates, list) or not isinstance(trusts, list) \
                or len(rates) != len(trusts):
            c.add(f"{path}.alert_rates", "needs a matching alert_trusts list")
        elif any(not isinstance(r, (int, float)) or r < 0 for r in rates):
            c.add(f"{path}.alert_rates", "rates must be non-negative numbers")
        else:
            # alerts are drawn once per scenario, from a stream separate from vehicles
            rng = np.random.default_rng([seed, 2 ** 31 - 1])
            alerts = alerts_from_poisson(rates, trusts, rng)

    laws = []
    tt = social.get("travel_time")
    if not isinstance(tt, list) or len(tt) != 2:
        c.add(f"{path}.travel_time", "must list exactly two laws, one per route")
    else:
        for i, law in enumerate(tt):
            p = f"{path}.travel_time[{i}]"
            if not isinstance(law, dict):
                c.add(p, "must be an object")
                continue
            vals = [c.number(law, k, p, required=True)
                    for k in ("mean", "std", "lower", "upper")]
            if None not in vals:
                laws.append(c.build(p, TravelTimeLaw, *map(float, vals)))

    k1 = c.number(social, "k1", path, required=True)
    k2 = social.get("k2")
    if not isinstance(k2, list) or len(k2) != 2 or \
            any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in k2):
        c.add(f"{path}.k2", "must list two numbers, one per route")
        k2 = None
    nveh = c.integer(social, "num_vehicles", path, required=True)
    nsamp = c.integer(social, "samples_per_vehicle", path, default=256)
    if nveh is not None and nveh < 2:
        c.add(f"{path}.num_vehicles", "must be at least 2")
    if nsamp is not None and nsamp < 1:
        c.add(f"{path}.samples_per_vehicle", "must be at least 1")
    if len(c.problems) > n0 or cpt is None or None in laws or len(laws) != 2:
        return None
    return c.build(path, SocialScenario, nveh, tuple(alerts), tuple(laws), float(k1),
                   tuple(float(v) for v in k2), cpt, seed, nsamp)


def scenario_from_dict(data: dict, seed: Optional[int] = None) -> Scenario:
    c = _Collector()
    data = copy.deepcopy(data)
    schema = data.get("schema")
    if schema != SCHEMA_VERSION:
        c.add("schema", f"must be {SCHEMA_VERSION}, got {schema!r}")
    name = data.get("name")
    if not isinstance(name, str) or not name:
        c.add("name", "must be a non-empty string")
        name = "scenario"
    if seed is None:
        seed = c.integer(data, "seed", "", default=0) if "seed" in data else 0
    seed = 0 if seed is None else int(seed)

    has_social = data.get("social") is not None
    has_alpha = data.get("alpha_override") is not None
    if has_social == has_alpha:
        c.add("alpha_override", "exactly one of 'social' and 'alpha_override' must be given")
    alpha = None
    if has_alpha:
        alpha = c.number(data, "alpha_override", "")
        if alpha is not None and not 0.0 < alpha < 1.0:
            c.add("alpha_override", "alpha must lie in (0,1)")
    social = None
    if has_social:
        raw_social = c.mapping(data, "social", "")
        if raw_social is not None:
            n_before = len(c.problems)
            social = _parse_social(c, raw_social, seed)
            if len(c.problems) > n_before:
                social = None

    model = c.mapping(data, "model", "") or {}
    start = c.number(model, "domain_start", "model", default=0.0)
    junction = c.number(model, "junction", "model", default=1.0)
    end = c.number(model, "domain_end", "model", default=junction)
    if None not in (start, junction, end) and not start < junction <= end:
        c.add("model", "need domain_start < junction <= domain_end")

    op_raw = c.mapping(data, "operating_point", "", required=True)
    op = None
    if op_raw is not None:
        vals = [c.number(op_raw, k, "operating_point", required=True)
                for k in ("rho1", "u1", "rho2", "u2")]
        if None not in vals:
            op = c.build("operating_point", OperatingPoint, *map(float, vals))

    solver_raw = c.mapping(data, "solver", "") or {}
    sp = "solver"
    pert_raw = c.mapping(solver_raw, "perturbation", sp) or {}
    pert_kwargs = {}
    if "shape" in pert_raw:
        pert_kwargs["shape"] = pert_raw["shape"]
    if "amplitude" in pert_raw:
        amp = pert_raw["amplitude"]
        if isinstance(amp, (int, float)) and not isinstance(amp, bool):
            amp = [amp, 0.0, amp, 0.0]
        pert_kwargs["amplitude"] = tuple(amp) if isinstance(amp, list) else amp
    for key in ("center", "width"):
        v = c.number(pert_raw, key, f"{sp}.perturbation")
        if v is not None:
            pert_kwargs[key] = float(v)
    perturbation = c.build(f"{sp}.perturbation", Perturbation, **pert_kwargs)

    scheme = solver_raw.get("scheme", SCHEMES[0])
    if scheme not in SCHEMES:
        c.add(f"{sp}.scheme", f"must be one of {', '.join(SCHEMES)}")
    cfl = c.number(solver_raw, "cfl", sp, default=0.9)
    if cfl is not None and not 0.0 < cfl < 1.0:
        c.add(f"{sp}.cfl", "must lie in (0,1)")
    cells = c.integer(solver_raw, "cells", sp, default=200)
    if cells is not None and cells < 16:
        c.add(f"{sp}.cells", "must be at least 16")
    route_cells = c.integer(solver_raw, "route_cells", sp, default=0)
    if route_cells and None not in (junction, end) and end <= junction:
        c.add("model.domain_end", "must exceed the junction when solver.route_cells > 0")
    route_op = None
    rop_raw = c.mapping(solver_raw, "route_operating_point", sp)
    if rop_raw is not None:
        vals = [c.number(rop_raw, k, f"{sp}.route_operating_point", required=True)
                for k in ("rho1", "u1", "rho2", "u2")]
        if None not in vals:
            route_op = c.build(f"{sp}.route_operating_point", OperatingPoint,
                               *map(float, vals))
    solver_kwargs = dict(
        cells=cells, cfl=cfl,
        t_end=c.number(solver_raw, "t_end", sp, default=50.0),
        output_interval=c.number(solver_raw, "output_interval", sp, default=0.5),
        scheme=scheme,
        G_B=c.matrix(solver_raw, "G_B", sp),
        G_C=c.matrix(solver_raw, "G_C", sp),
        boundary=solver_raw.get("boundary", "coupled"),
        route_cells=route_cells,
        route_operating_point=route_op,
    )
    tail = c.number(solver_raw, "tail_fraction", sp, default=0.5)
    if tail is not None and not 0.0 < tail <= 1.0:
        c.add(f"{sp}.tail_fraction", "must lie in (0,1]")

    fd_slopes = data.get("fd", {}).get("dHdx", list(DEFAULT_FD_SLOPES)) \
        if isinstance(data.get("fd", {}), dict) else None
    if not isinstance(fd_slopes, list) or \
            any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in fd_slopes):
        c.add("fd.dHdx", "must be a list of numbers")
        fd_slopes = list(DEFAULT_FD_SLOPES)

    mu_grid = None
    analysis_raw = c.mapping(data, "analysis", "") or {}
    if "mu_grid" in analysis_raw:
        mg = analysis_raw["mu_grid"]
        if not isinstance(mg, list) or not mg or \
                any(not isinstance(v, (int, float)) or v <= 0 for v in mg):
            c.add("analysis.mu_grid", "must be a non-empty list of positive numbers")
        else:
            mu_grid = tuple(float(v) for v in mg)

    outputs = data.get("outputs", "out")
    if not isinstance(outputs, str):
        c.add("outputs", "must be a directory path string")
        outputs = "out"

    solver = None
    if op is not None and perturbation is not None and not c.problems:
        solver = c.build(sp, SolverConfig, op, perturbation=perturbation,
                         start=float(start), junction=float(junction),
                         route_end=float(end) if end > junction else float(junction) + 1.0,
                         **solver_kwargs)
    if c.problems:
        raise ScenarioValidationError(c.problems)

    return Scenario(
        name=name, operating_point=op, solver=solver, social=social,
        alpha_override=None if alpha is None else float(alpha),
        domain_start=float(start), junction=float(junction), domain_end=float(end),
        outputs=outputs, seed=seed, fd_slopes=tuple(float(v) for v in fd_slopes),
        mu_grid=mu_grid, tail_fraction=float(tail), raw=data,
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    """Serialise a scenario so that :func:`scenario_from_dict` rebuilds it."""
    s = scenario.solver
    op = scenario.operating_point
    out = {
        "schema": SCHEMA_VERSION,
        "name": scenario.name,
        "seed": scenario.seed,
        "outputs": scenario.outputs,
        "model": {"domain_start": scenario.domain_start, "junction": scenario.junction,
                  "domain_end": scenario.domain_end},
        "operating_point": {"rho1": op.rho1, "u1": op.u1, "rho2": op.rho2, "u2": op.u2},
        "solver": {
            "cells": s.cells, "cfl": s.cfl, "t_end": s.t_end,
            "output_interval": s.output_interval, "scheme": s.scheme,
            "G_B": s.G_B.tolist(), "G_C": s.G_C.tolist(), "boundary": s.boundary,
            "route_cells": s.route_cells, "tail_fraction": scenario.tail_fraction,
            "perturbation": {
                "shape": s.perturbation.shape,
                "amplitude": [float(a) for a in s.perturbation.amplitude],
                "center": s.perturbation.center, "width": s.perturbation.width,
            },
        },
        "fd": {"dHdx": list(scenario.fd_slopes)},
    }
    if s.route_operating_point is not None:
        r = s.route_operating_point
        out["solver"]["route_operating_point"] = {
            "rho1": r.rho1, "u1": r.u1, "rho2": r.rho2, "u2": r.u2}
    if scenario.mu_grid is not None:
        out["analysis"] = {"mu_grid": list(scenario.mu_grid)}
    if scenario.alpha_override is not None:
        out["alpha_override"] = scenario.alpha_override
    if scenario.social is not None:
        soc = scenario.social
        out["social"] = {
            "num_vehicles": soc.num_vehicles,
            "samples_per_vehicle": soc.samples_per_vehicle,
            "alerts": [{"signal": a.signal, "trust": a.trust} for a in soc.alerts],
            "travel_time": [{"mean": t.mean, "std": t.std, "lower": t.lower,
                             "upper": t.upper} for t in soc.travel_time],
            "k1": soc.k1,
            "k2": list(soc.k2),
            "cpt": soc.cpt.to_dict(),
        }
    return out
