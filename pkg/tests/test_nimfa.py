from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sisnet.errors import InstabilityError, ParameterError, ShapeError, UndefinedThresholdError
from sisnet.graph import build_complete, build_path, build_random, build_ring, build_star, load_edge_list
from sisnet.model import ModelParams
from sisnet.nimfa import (
    endemic_equilibrium,
    integrate_nimfa,
    nimfa_drift,
    nimfa_threshold,
    regular_equilibrium,
    step_schedule,
)


def _rational_drift(adj, beta, delta, x):
    """Exact-arithmetic reference drift."""
    n = len(x)
    xs = [Fraction(v) for v in x]
    out = []
    for i in range(n):
        s = sum(Fraction(int(adj[i][j])) * xs[j] for j in range(n))
        out.append(Fraction(beta) * s * (1 - xs[i]) - Fraction(delta) * xs[i])
    return out


def test_drift_at_corners():
    g = build_ring(7)
    p = ModelParams(1.3, 0.7)
    np.testing.assert_array_equal(nimfa_drift(g, p, np.zeros(7)), np.zeros(7))
    np.testing.assert_allclose(nimfa_drift(g, p, np.ones(7)), np.full(7, -0.7))


def test_drift_hand_value_on_four_cycle():
    f = nimfa_drift(build_ring(4), ModelParams(1.0, 1.0), np.full(4, 0.5))
    np.testing.assert_array_equal(f, np.zeros(4))


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(0, 1), min_size=6, max_size=6),
    st.floats(0, 5),
    st.floats(0.01, 5),
)
def test_drift_matches_rational_oracle(x, beta, delta):
    g = build_path(6)
    exact = _rational_drift(g.adjacency, beta, delta, x)
    got = nimfa_drift(g, ModelParams(beta, delta), np.array(x))
    np.testing.assert_allclose(got, [float(v) for v in exact], atol=1e-12)


def test_threshold_values():
    assert nimfa_threshold(build_ring(50).spectral) == pytest.approx(0.5, abs=1e-12)
    assert round(nimfa_threshold(build_complete(40).spectral), 4) == 0.0256


def test_threshold_undefined_without_edges():
    g = load_edge_list("", n=3)
    with pytest.warns(RuntimeWarning):
        s = g.spectral
    with pytest.raises(UndefinedThresholdError):
        nimfa_threshold(s)


def test_zero_state_stays_zero():
    traj = integrate_nimfa(build_ring(10), ModelParams(2.0, 1.0), np.zeros(10), 5.0)
    assert np.all(traj.states == 0.0)


def test_ring_converges_to_regular_level():
    p = ModelParams(1.5, 2.8)
    traj = integrate_nimfa(build_ring(50), p, np.full(50, 0.5), 120.0, dt=1e-2)
    np.testing.assert_allclose(traj.final, 1 - 2.8 / 3.0, atol=1e-6)
    assert np.ptp(traj.final) < 1e-12


def test_below_threshold_decays():
    g = build_random(20, 0.3, seed=5)
    lam = g.spectral.lambda1
    p = ModelParams(0.8 / lam, 1.0)
    x0 = np.random.default_rng(1).uniform(0.1, 0.9, 20)
    traj = integrate_nimfa(g, p, x0, 40.0)
    peaks = traj.states.max(axis=1)
    assert peaks[-1] < 1e-2 * peaks[0]
    assert np.all(np.diff(peaks[len(peaks) // 4:]) <= 1e-15)


def test_saved_grid_layout():
    traj = integrate_nimfa(build_ring(5), ModelParams(1, 1), np.full(5, 0.3), 1.0, dt=0.01, save_every=7)
    assert traj.times[0] == 0.0
    assert traj.times[-1] == 1.0
    np.testing.assert_allclose(np.diff(traj.times[:-1]), 0.07)
    assert len(traj.times) == len(traj.states) == 100 // 7 + 2


def test_step_schedule_short_final_step():
    n, last = step_schedule(1.0, 0.3)
    assert n == 4
    assert last == pytest.approx(0.1)
    assert step_schedule(1.0, 0.25) == (4, 0.25)


def test_rk4_fourth_order():
    g = build_star(6)
    p = ModelParams(1.5, 2.0)
    x0 = np.linspace(0.1, 0.9, 6)
    t_end, dt = 2.0, 0.025
    ref = integrate_nimfa(g, p, x0, t_end, dt=dt / 16, save_every=10**6).final
    coarse = np.max(np.abs(integrate_nimfa(g, p, x0, t_end, dt=dt, save_every=10**6).final - ref))
    fine = np.max(np.abs(integrate_nimfa(g, p, x0, t_end, dt=dt / 2, save_every=10**6).final - ref))
    assert 14 < coarse / fine < 18


def test_euler_first_order():
    g = build_ring(6)
    p = ModelParams(1.0, 1.0)
    x0 = np.linspace(0.2, 0.7, 6)
    ref = integrate_nimfa(g, p, x0, 1.0, dt=1e-4, save_every=10**6).final
    errs = [np.max(np.abs(integrate_nimfa(g, p, x0, 1.0, dt=h, save_every=10**6, scheme="euler").final - ref))
            for h in (0.01, 0.005)]
    assert 1.8 < errs[0] / errs[1] < 2.2


def test_unstable_step_detected():
    with pytest.raises(InstabilityError):
        integrate_nimfa(build_complete(40), ModelParams(0.5, 46.0), np.full(40, 0.9), 1.0, dt=0.2, scheme="euler")


def test_bad_arguments():
    g = build_ring(5)
    with pytest.raises(ShapeError):
        integrate_nimfa(g, ModelParams(1, 1), np.zeros(4), 1.0)
    with pytest.raises(ParameterError):
        integrate_nimfa(g, ModelParams(1, 1), np.full(5, 1.5), 1.0)
    with pytest.raises(ParameterError):
        integrate_nimfa(g, ModelParams(1, 1), np.zeros(5), 1.0, scheme="leapfrog")


@pytest.mark.parametrize("g,beta,delta,k", [
    (build_ring(50), 1.5, 2.8, 2),
    (build_complete(40), 0.5, 13.5, 39),
], ids=["ring50", "k40"])
def test_regular_equilibrium(g, beta, delta, k):
    p = ModelParams(beta, delta)
    res = endemic_equilibrium(g, p)
    assert not res.below_threshold
    target = regular_equilibrium(k, p)
    np.testing.assert_allclose(res.x, target, atol=1e-10)
    assert np.max(np.abs(nimfa_drift(g, p, res.x))) <= 1e-11


def test_equilibrium_levels():
    assert regular_equilibrium(2, ModelParams(1.5, 2.8)) == pytest.approx(0.066667, abs=1e-6)
    assert regular_equilibrium(39, ModelParams(0.5, 13.5)) == pytest.approx(0.307692, abs=1e-6)


def test_below_threshold_equilibrium_is_flagged():
    res = endemic_equilibrium(build_ring(10), ModelParams(0.4, 1.0))
    assert res.below_threshold
    assert np.all(res.x == 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(1.1, 4.0))
def test_equilibrium_residual_on_random_graphs(seed, factor):
    g = build_random(15, 0.4, seed=seed)
    if not g.is_connected():
        return
    p = ModelParams(factor / g.spectral.lambda1, 1.0)
    res = endemic_equilibrium(g, p)
    assert np.all((res.x > 0) & (res.x < 1))
    assert np.max(np.abs(nimfa_drift(g, p, res.x))) <= 1e-11


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=8, max_size=8), st.floats(0, 6), st.floats(0.05, 6))
def test_forward_invariance(x0, beta, delta):
    traj = integrate_nimfa(build_ring(8), ModelParams(beta, delta), np.array(x0), 2.0, dt=1e-2)
    assert traj.states.min() >= 0.0
    assert traj.states.max() <= 1.0
