"""Batch command line: ``choice``, ``analyze``, ``simulate``, ``fd``, ``density``.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 degenerate
route split, 5 CFL violation, 6 not strictly hyperbolic, 7 non-finite
state, 8 blocked junction, 1 anything else raised by the library.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import analysis, density, model, reporting
from .errors import NonHyperbolicError, ScenarioValidationError, TrafficModelError
from .route_choice import choose_routes, route_probabilities
from .scenario import DEFAULT_FD_SLOPES, parse_scenario
from .solver import run_simulation

log = logging.getLogger("sociotraffic")

EXIT_OK = 0
DECAY_FLOOR = 1e-12


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _sweep(text):
    key, _, values = text.partition("=")
    if key.strip() != "alpha" or not values:
        raise argparse.ArgumentTypeError("sweep must look like alpha=0.35,0.45,0.55")
    alphas = _float_list(values)
    if not alphas:
        raise argparse.ArgumentTypeError("sweep needs at least one alpha")
    return alphas


def resolve_alpha(scenario):
    """alpha from the override or, failing that, from the route-choice model."""
    if scenario.alpha_override is not None:
        return scenario.alpha_override, None
    outcome = choose_routes(scenario.social)
    return outcome.alpha, outcome


def _out_dir(args, scenario):
    return Path(args.out) if args.out else Path(scenario.outputs)


def cmd_choice(args) -> int:
    scenario = parse_scenario(args.scenario, seed=args.seed)
    if scenario.social is None:
        raise ScenarioValidationError("social: the choice command needs a 'social' section")
    outcome = choose_routes(scenario.social)
    out = _out_dir(args, scenario)
    phi = scenario.social.cpt.phi

    def rows():
        for k, ((u1, u2), route) in enumerate(zip(outcome.utilities, outcome.choices)):
            p1, p2 = route_probabilities(u1, u2, phi)
            yield k, u1, u2, p1, p2, route

    reporting.write_csv(out / f"{scenario.name}_choice_vehicles.csv",
                        ["vehicle", "cpt_route1", "cpt_route2", "p_route1", "p_route2",
                         "route"], rows())
    reporting.write_csv(out / f"{scenario.name}_choice_summary.csv",
                        ["M1", "M2", "alpha", "kappa"],
                        [(outcome.m1, outcome.m2, outcome.alpha, outcome.kappa)])
    print(f"M1={outcome.m1} M2={outcome.m2} alpha={outcome.alpha:.6g}")
    return EXIT_OK


def build_report(scenario, alpha):
    return analysis.stability_report(
        scenario.operating_point, alpha, scenario.solver.G_B,
        scenario.domain_start, scenario.junction, scenario.mu_grid)


def cmd_analyze(args) -> int:
    scenario = parse_scenario(args.scenario, seed=args.seed)
    alpha, _ = resolve_alpha(scenario)
    report = build_report(scenario, alpha)
    reporting.write_stability(report, _out_dir(args, scenario),
                              reporting.run_stem(scenario.name, alpha))
    sys.stdout.write(report.to_text())
    if not report.hyperbolic:
        raise NonHyperbolicError(
            f"operating point is not strictly hyperbolic at alpha={alpha:g} "
            f"(margins {report.margins[0]:.4g}, {report.margins[1]:.4g})")
    return EXIT_OK


def simulate_one(scenario, alpha, out_dir):
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        traj = run_simulation(scenario.solver, alpha)
    stem = reporting.run_stem(scenario.name, alpha)
    reporting.write_trajectory(traj, out_dir, stem)
    fits = []
    for c in range(2):
        try:
            fits.append(analysis.fit_decay(traj.times, traj.norms[:, c],
                                           scenario.tail_fraction, floor=DECAY_FLOOR))
        except ValueError as exc:
            log.warning("decay fit for class %d skipped: %s", c + 1, exc)
            fits.append(analysis.DecayFit(float("nan"), float("nan"), float("nan"), True))
    return traj, fits


def cmd_simulate(args) -> int:
    scenario = parse_scenario(args.scenario, seed=args.seed)
    alphas = args.sweep if args.sweep else [resolve_alpha(scenario)[0]]
    out = _out_dir(args, scenario)
    rows = []
    for alpha in alphas:
        if not 0.0 < alpha < 1.0:
            raise ScenarioValidationError(f"sweep: alpha must lie in (0,1), got {alpha}")
        traj, fits = simulate_one(scenario, alpha, out)
        n0, n1 = traj.norms[0], traj.norms[-1]
        rows.append((alpha, *n0, *n1, fits[0].epsilon, fits[0].prefactor,
                     fits[0].r_squared, fits[1].epsilon, fits[1].prefactor,
                     fits[1].r_squared))
        print(f"alpha={alpha:g} final/initial norm: "
              + ", ".join(f"{b / a:.3g}" if a > 0 else "n/a" for a, b in zip(n0, n1))
              + f"  epsilon: {fits[0].epsilon:.4g}, {fits[1].epsilon:.4g}")
    reporting.write_csv(out / f"{scenario.name}_decay.csv",
                        ["alpha", "norm0_class1", "norm0_class2", "norm_end_class1",
                         "norm_end_class2", "epsilon_class1", "M_class1", "r2_class1",
                         "epsilon_class2", "M_class2", "r2_class2"], rows)
    return EXIT_OK


def cmd_fd(args) -> int:
    name, out = "fd", Path(args.out or "out")
    slopes = list(DEFAULT_FD_SLOPES)
    if args.scenario:
        scenario = parse_scenario(args.scenario, seed=args.seed)
        name, slopes = scenario.name, list(scenario.fd_slopes)
        out = _out_dir(args, scenario)
    if args.dhdx:
        slopes = args.dhdx
    d_grid = np.linspace(0.0, 1.0 + max(slopes), args.points)
    table = model.fundamental_diagram(slopes, d_grid)
    path = reporting.write_csv(out / f"{name}_fd.csv", ["dHdx", "d", "u"], table)
    print(path)
    return EXIT_OK


def cmd_density(args) -> int:
    positions = np.loadtxt(args.positions, delimiter=",", ndmin=1)
    a = args.bandwidth
    lo = positions.min() - 6.5 * a
    hi = positions.max() + 6.5 * a
    num = max(args.points, int(np.ceil((hi - lo) / (a / 4.0))) + 1)
    field = density.kde_density(positions, a, density.uniform_grid(lo, hi, num))
    out = Path(args.out or "out")
    path = reporting.write_csv(out / f"{Path(args.positions).stem}_density.csv",
                               ["x", "value"], zip(field.grid, field.values))
    print(path)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="sociotraffic", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario_required=True):
        p.add_argument("--scenario", required=scenario_required, help="scenario JSON file")
        p.add_argument("--out", help="output directory (default: scenario 'outputs')")
        p.add_argument("--seed", type=int, help="override the scenario seed")

    common(sub.add_parser("choice", help="route choice -> M1, M2, alpha"))
    common(sub.add_parser("analyze", help="eigenvalues, hyperbolicity, Lyapunov certificate"))
    p = sub.add_parser("simulate", help="integrate the perturbed model")
    common(p)
    p.add_argument("--sweep", type=_sweep, help="alpha=a,b,c: one independent run per alpha")
    p = sub.add_parser("fd", help="fundamental diagram table")
    common(p, scenario_required=False)
    p.add_argument("--dhdx", type=_float_list, help="comma-separated cost-gradient slices")
    p.add_argument("--points", type=int, default=101)
    p = sub.add_parser("density", help="kernel density of vehicle positions")
    p.add_argument("--positions", required=True, help="CSV/text file of positions")
    p.add_argument("--bandwidth", type=float, default=0.02)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--out")
    return parser


COMMANDS = {"choice": cmd_choice, "analyze": cmd_analyze, "simulate": cmd_simulate,
            "fd": cmd_fd, "density": cmd_density}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ScenarioValidationError as exc:
        print("validation error:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  {problem}", file=sys.stderr)
        return exc.exit_code
    except TrafficModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
