import numpy as np
import pytest

from sociotraffic.errors import (CFLViolationError, JunctionBlockedError, NonFiniteStateError,
                                 NonHyperbolicError)
from sociotraffic.model import OperatingPoint, TrafficState, jacobian
from sociotraffic.solver import (LINEARIZED, PERIODIC, Perturbation, SolverConfig,
                                 apply_boundary, cell_centres, characteristic_decomposition,
                                 couple_junction_fluxes, deviation_norms, junction_flux,
                                 junction_residual, run_simulation, stable_dt, step_linearized,
                                 step_nonlinear)

OP = OperatingPoint(0.85, 0.09, 0.75, 0.095)
ALPHA = 0.45
JAC = jacobian(OP, ALPHA)
ZERO = np.zeros((4, 4))


def bumped_state(n=200, amp=(0.01, 0.0, 0.01, 0.0), center=0.5, width=0.1):
    grid = cell_centres(0.0, 1.0, n)
    st = TrafficState.uniform(grid, OP)
    st.data += Perturbation("gaussian-bump", amp, center, width).profile(grid, 0.0, 1.0)
    return st


def dt_for(state, cfl=0.9):
    return stable_dt(state.data, state.dx, ALPHA, cfl)


class TestConstantState:
    def test_nonlinear_fixed_point(self):
        st = TrafficState.uniform(cell_centres(0, 1, 64), OP)
        for ghosts in (None, PERIODIC, apply_boundary(st, ZERO, OP)):
            out = step_nonlinear(st, dt_for(st), ALPHA, ghosts)
            np.testing.assert_array_equal(out.data, st.data)

    def test_linearized_fixed_point(self):
        st = TrafficState.uniform(cell_centres(0, 1, 64), OP)
        for ghosts in (None, PERIODIC, apply_boundary(st, ZERO, OP)):
            out = step_linearized(st, dt_for(st), JAC, ghosts)
            np.testing.assert_allclose(out.data, st.data, rtol=0, atol=1e-15)

    def test_zero_perturbation_run(self):
        cfg = SolverConfig(OP, cells=64, t_end=2.0, perturbation=Perturbation(amplitude=(0, 0, 0, 0)))
        traj = run_simulation(cfg, ALPHA)
        assert np.all(traj.norms == 0.0)


class TestConservation:
    def test_periodic_mass_per_step(self):
        st = bumped_state(n=128)
        mass0 = st.data[[0, 2]].sum(axis=1) * st.dx
        for _ in range(200):
            new = step_nonlinear(st, dt_for(st), ALPHA, PERIODIC)
            mass = new.data[[0, 2]].sum(axis=1) * new.dx
            prev = st.data[[0, 2]].sum(axis=1) * st.dx
            assert np.all(np.abs(mass - prev) < 1e-10)
            st = new
        assert np.all(np.abs(mass - mass0) < 1e-12)

    def test_mass_changes_only_by_boundary_flux(self):
        st = bumped_state(n=128)
        dt = dt_for(st)
        ghosts = apply_boundary(st, 0.5 * np.eye(4), OP)
        new, info = step_nonlinear(st, dt, ALPHA, ghosts, return_info=True)
        change = (new.data - st.data).sum(axis=1) * st.dx
        expected = dt * (info["left_flux"] - info["right_flux"])
        np.testing.assert_allclose(change, expected, atol=1e-15)


class TestAdvection:
    def test_bump_moves_left(self):
        st = bumped_state(n=200, amp=(0.01, 0, 0, 0))
        t = 0.0
        while t < 1.5:
            dt = dt_for(st)
            st = step_nonlinear(st, dt, ALPHA, apply_boundary(st, ZERO, OP))
            t += dt
        dev = st.data[0] - OP.rho1
        centroid = np.sum(st.grid * np.abs(dev)) / np.sum(np.abs(dev))
        assert centroid < 0.5 - 0.05

    def test_characteristic_mode_speed(self):
        # a pure eigen-mode of the frozen Jacobian translates at its eigenvalue
        lam, R, _ = characteristic_decomposition(JAC)
        k = int(np.argmin(lam))
        n = 400
        grid = cell_centres(0, 1, n)
        st = TrafficState.uniform(grid, OP)
        profile = np.exp(-0.5 * ((grid - 0.6) / 0.05) ** 2)
        st.data += 1e-3 * R[:, k:k + 1] * profile
        T, t = 1.5, 0.0
        while t < T - 1e-12:
            dt = min(0.9 * st.dx / np.max(np.abs(lam)), T - t)
            st = step_linearized(st, dt, JAC, PERIODIC)
            t += dt
        w = np.linalg.solve(R, st.data - OP.as_array()[:, None])[k]
        centroid = np.sum(grid * w) / np.sum(w)
        assert centroid == pytest.approx(0.6 + lam[k] * T, abs=2 * st.dx)


class TestBoundary:
    def test_identity_copies_upstream_trace(self):
        st = bumped_state(n=32, center=0.0)
        padded = apply_boundary(st, np.eye(4))
        np.testing.assert_array_equal(padded[:, -1], st.data[:, 0])

    def test_zero_is_absorbing(self):
        st = bumped_state(n=32, center=0.0)
        np.testing.assert_array_equal(apply_boundary(st, ZERO)[:, -1], np.zeros(4))
        np.testing.assert_array_equal(apply_boundary(st, ZERO, OP)[:, -1], OP.as_array())

    def test_half_coupling(self):
        st = bumped_state(n=32, center=0.0)
        np.testing.assert_allclose(apply_boundary(st, 0.5 * np.eye(4))[:, -1],
                                   0.5 * st.data[:, 0], rtol=1e-15)

    def test_upstream_ghost_zero_gradient(self):
        st = bumped_state(n=32)
        padded = apply_boundary(st, ZERO, OP)
        np.testing.assert_array_equal(padded[:, 0], st.data[:, 0])
        np.testing.assert_array_equal(padded[:, 1:-1], st.data)


class TestJunction:
    def test_zero_incoming(self):
        (incoming, out), res = junction_flux(np.zeros(4), [0.5, 0.2, 0.4, 0.1], 0.45)
        np.testing.assert_array_equal(out, [0.0, 0.0])
        assert res == pytest.approx(-(0.1 + 0.04))
        assert junction_residual(incoming, out, 0.45) == 0.0

    def test_matched_symmetric(self):
        # alpha = 0.5: 0.5*(q + q) = q/2 + q/2 on the outgoing side
        left = [0.5, 0.4, 0.5, 0.4]
        right = [0.5, 0.2, 0.5, 0.2]
        (incoming, out), res = junction_flux(left, right, 0.5)
        assert res == 0.0
        np.testing.assert_array_equal(out, [0.1, 0.1])

    def test_mismatched_post_residual(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            left, right = rng.uniform(0.01, 1, 4), rng.uniform(0.01, 1, 4)
            alpha = rng.uniform(0.05, 0.95)
            (incoming, out), _ = junction_flux(left, right, alpha)
            assert abs(junction_residual(incoming, out, alpha)) < 1e-12

    def test_blocked(self):
        with pytest.raises(JunctionBlockedError):
            couple_junction_fluxes([0.1, 0.1], [0.0, 0.0], 0.45)

    def test_network_run(self):
        cfg = SolverConfig(OP, cells=64, t_end=5.0, route_cells=64, route_end=2.0)
        traj = run_simulation(cfg, ALPHA)
        assert len(traj.route_states) == len(traj.times)
        assert max(abs(r) for r in traj.junction_residuals) < 1e-12


class TestLinearVsNonlinear:
    @staticmethod
    def gap(n, a):
        grid = cell_centres(0, 1, n)
        st = TrafficState.uniform(grid, OP)
        st.data += a * np.array([1.0, 0, 1.0, 0])[:, None] * np.exp(-0.5 * ((grid - 0.5) / 0.1) ** 2)
        ghosts = apply_boundary(st, ZERO, OP)
        dt = 0.9 * st.dx / 0.16914268
        return step_nonlinear(st, dt, ALPHA, ghosts).data - step_linearized(st, dt, JAC, ghosts).data

    def test_nonlinear_part_is_quadratic(self):
        part = lambda a: np.abs(self.gap(200, 2 * a) - 2 * self.gap(200, a)).sum()
        assert part(2e-3) / part(1e-3) == pytest.approx(4.0, rel=0.05)

    def test_scheme_difference_shrinks_with_dx(self):
        l1 = [np.abs(self.gap(n, 1e-3)).sum() / n for n in (100, 200, 400)]
        assert l1[1] < l1[0] / 3 and l1[2] < l1[1] / 3


class TestGuards:
    def test_cfl_violation(self):
        st = bumped_state(n=64)
        with pytest.raises(CFLViolationError):
            step_nonlinear(st, 2 * dt_for(st, 1.0), ALPHA)
        with pytest.raises(CFLViolationError):
            step_linearized(st, 2 * dt_for(st, 1.0), JAC)

    def test_non_finite(self):
        st = bumped_state(n=64)
        st.data[1, 3] = np.nan
        with pytest.raises(NonFiniteStateError):
            step_nonlinear(st, 1e-3, ALPHA)

    def test_non_hyperbolic_decomposition(self):
        with pytest.raises(NonHyperbolicError):
            characteristic_decomposition(jacobian(OP, 0.2))

    def test_non_hyperbolic_warns(self):
        cfg = SolverConfig(OP, cells=32, t_end=0.5)
        with pytest.warns(RuntimeWarning):
            run_simulation(cfg, 0.2)

    @pytest.mark.parametrize("kw", [dict(cfl=1.0), dict(cells=8), dict(scheme="weno"),
                                    dict(G_B=np.eye(3)),
                                    dict(perturbation=Perturbation(amplitude=(1.0, 0, 0, 0)))])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(OP, **kw)


class TestRun:
    def test_deterministic(self):
        cfg = SolverConfig(OP, cells=64, t_end=3.0)
        a, b = run_simulation(cfg, ALPHA), run_simulation(cfg, ALPHA)
        np.testing.assert_array_equal(a.norms, b.norms)

    def test_output_grid(self):
        traj = run_simulation(SolverConfig(OP, cells=32, t_end=2.0, output_interval=0.5), ALPHA)
        np.testing.assert_allclose(traj.times, [0, 0.5, 1.0, 1.5, 2.0])
        assert np.all(np.diff(traj.times) > 0) and np.all(traj.norms >= 0)

    def test_linearized_scheme_decays(self):
        traj = run_simulation(SolverConfig(OP, cells=100, t_end=20.0, scheme=LINEARIZED), ALPHA)
        assert np.all(traj.norms[-1] < 0.01 * traj.norms[0])

    def test_norms_eventually_monotone(self):
        traj = run_simulation(SolverConfig(OP, cells=100, t_end=20.0), ALPHA)
        tail = traj.norms[len(traj.norms) // 4:]
        assert np.all(np.diff(tail, axis=0) <= 1e-15)

    def test_deviation_norm_value(self):
        st = TrafficState.uniform(cell_centres(0, 1, 10), OP)
        st.data[0] += 0.1
        np.testing.assert_allclose(deviation_norms(st, OP), [0.1, 0.0], atol=1e-15)
