import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sociotraffic.cpt import CptParams
from sociotraffic.errors import DegenerateSplitError
from sociotraffic.route_choice import (Alert, SocialScenario, TravelTimeLaw, alerts_from_poisson,
                                       choose_routes, compute_alpha, route_probabilities,
                                       sample_route_utility)
from sociotraffic.scenario import parse_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def make_scenario(k2=(0.0, 0.0), laws=None, n=200, samples=32, seed=0, alerts=(), k1=-1.0):
    laws = laws or (TravelTimeLaw(0.5, 0.2, 0.0, 1.0), TravelTimeLaw(0.5, 0.2, 0.0, 1.0))
    return SocialScenario(num_vehicles=n, alerts=tuple(alerts), travel_time=tuple(laws),
                          k1=k1, k2=tuple(k2), cpt=CptParams(), rng_seed=seed,
                          samples_per_vehicle=samples)


class TestSampling:
    def test_degenerate_travel_time(self):
        law = TravelTimeLaw(0.4, 1e-12, 0.0, 1.0)
        sc = make_scenario(k2=(0.1, 0.0), laws=(law, law))
        z = sample_route_utility(sc, 1, np.random.default_rng(0), size=100)
        np.testing.assert_allclose(z, -1.0 * 0.4 + 0.1, atol=1e-10)

    def test_no_randomness_without_travel_weight(self):
        sc = make_scenario(k2=(0.1, 0.1), k1=0.0,
                           alerts=(Alert(1, 0.3), Alert(1, 0.5)))
        z = sample_route_utility(sc, 1, np.random.default_rng(0), size=1000)
        np.testing.assert_allclose(z, 0.9, atol=1e-15)

    def test_draws_stay_in_bounds(self):
        sc = make_scenario(k2=(0.2, 0.0), k1=0.7)
        z = sample_route_utility(sc, 1, np.random.default_rng(5), size=100_000)
        assert z.min() >= 0.2 and z.max() <= 0.2 + 0.7

    def test_far_tail_truncation(self):
        law = TravelTimeLaw(5.0, 0.1, 0.0, 1.0)
        t = law.sample(np.random.default_rng(1), size=1000)
        assert np.all((t >= 0.0) & (t <= 1.0))

    @pytest.mark.parametrize("kw", [dict(std=0.0), dict(lower=1.0, upper=0.0)])
    def test_invalid_law(self, kw):
        args = dict(mean=0.5, std=0.1, lower=0.0, upper=1.0) | kw
        with pytest.raises(ValueError):
            TravelTimeLaw(**args)

    def test_poisson_alerts_are_binary(self):
        alerts = alerts_from_poisson([0.0, 50.0, 1.0], [0.1, 0.2, 0.3],
                                     np.random.default_rng(0))
        assert alerts[0].signal == 0 and alerts[1].signal == 1
        assert all(a.signal in (0, 1) for a in alerts)


class TestLogit:
    def test_equal_utilities(self):
        assert route_probabilities(0.3, 0.3, 4.0) == (0.5, 0.5)

    def test_zero_sensitivity(self):
        assert route_probabilities(-7.0, 12.0, 0.0) == (0.5, 0.5)

    def test_log_three(self):
        p1, p2 = route_probabilities(0.0, math.log(3.0), 1.0)
        assert p1 == pytest.approx(0.25, abs=1e-15)
        assert p2 == pytest.approx(0.75, abs=1e-15)

    def test_no_overflow(self):
        p1, p2 = route_probabilities(0.0, 1e6, 10.0)
        assert p1 == 0.0 and p2 == 1.0
        p1, p2 = route_probabilities(1e6, 0.0, 10.0)
        assert p1 == 1.0 and p2 == 0.0

    def test_negative_phi(self):
        with pytest.raises(ValueError):
            route_probabilities(0.0, 1.0, -1.0)

    @given(st.integers(-3200, 3200), st.integers(-3200, 3200), st.floats(0, 5),
           st.sampled_from([-3.0, -0.25, 0.0, 0.5, 2.0]))
    def test_shift_invariance(self, k1, k2, phi, c):
        # dyadic utilities and shifts keep u + c exact in floating point
        u1, u2 = k1 / 64, k2 / 64
        assert route_probabilities(u1 + c, u2 + c, phi) == route_probabilities(u1, u2, phi)

    @given(st.floats(-20, 20), st.floats(-20, 20), st.floats(0.01, 5))
    def test_sums_to_one_and_monotone(self, u1, u2, phi):
        p1, p2 = route_probabilities(u1, u2, phi)
        assert p1 + p2 == pytest.approx(1.0, abs=1e-15)
        q1, _ = route_probabilities(u1 + 0.5, u2, phi)
        assert q1 >= p1


class TestAlpha:
    @pytest.mark.parametrize("m1,m2,alpha", [(50, 50, 0.5), (45, 55, 0.45), (1, 999, 0.001)])
    def test_examples(self, m1, m2, alpha):
        assert compute_alpha(m1, m2) == pytest.approx(alpha, abs=1e-15)

    @pytest.mark.parametrize("m1,m2", [(0, 10), (10, 0)])
    def test_degenerate(self, m1, m2):
        with pytest.raises(DegenerateSplitError):
            compute_alpha(m1, m2)


class TestChooseRoutes:
    def test_dominance_is_degenerate(self):
        with pytest.raises(DegenerateSplitError) as info:
            choose_routes(make_scenario(k2=(0.0, -10.0)))
        assert info.value.m1 == 200 and info.value.m2 == 0

    def test_deterministic(self):
        a = choose_routes(make_scenario(seed=7))
        b = choose_routes(make_scenario(seed=7))
        assert (a.m1, a.m2) == (b.m1, b.m2)
        np.testing.assert_array_equal(a.utilities, b.utilities)
        np.testing.assert_array_equal(a.choices, b.choices)

    def test_outcome_invariants(self):
        out = choose_routes(make_scenario(seed=3))
        assert out.m1 + out.m2 == 200
        assert out.alpha == pytest.approx(out.m1 / 200)
        assert out.kappa == pytest.approx(out.m1 / out.m2)

    @pytest.mark.parametrize("seed", range(5))
    def test_symmetric_routes_split_evenly(self, seed):
        # binomial(1000, 1/2): P(|alpha - 0.5| > 0.1) is below 1e-9
        out = choose_routes(make_scenario(n=1000, samples=16, seed=seed))
        assert 0.4 <= out.alpha <= 0.6

    def test_monotone_response(self):
        counts = [choose_routes(make_scenario(k2=(b, 0.0), seed=1)).m1
                  for b in (-0.02, -0.01, 0.0, 0.01, 0.02)]
        assert counts == sorted(counts)

    def test_tuned_scenario(self):
        sc = parse_scenario(SCENARIOS / "route_choice.json")
        out = choose_routes(sc.social)
        assert out.alpha == pytest.approx(0.45, abs=0.01)

    def test_invalid_scenario(self):
        with pytest.raises(ValueError):
            make_scenario(n=1)
