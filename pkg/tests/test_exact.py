import math

import numpy as np
import pytest
from scipy import stats
from scipy.linalg import expm

from sisnet.errors import ParameterError, ShapeError, SizeError
from sisnet.exact import (
    INFECT,
    RECOVER,
    exact_distribution,
    exact_marginals_mc,
    exact_marginals_ode,
    gillespie_path,
    nimfa_bound_report,
    sample_on_grid,
    sis_generator,
    state_bits,
)
from sisnet.graph import build_complete, build_path, build_ring, build_star, load_edge_list
from sisnet.model import ModelParams

TIMES = np.linspace(0.0, 2.0, 21)


def _dense_marginals(g, p, x0, times):
    # oracle: build Q by brute force from the transition rules and use expm
    n = g.n
    size = 1 << n
    Q = np.zeros((size, size))
    for s in range(size):
        for i in range(n):
            if s >> i & 1:
                Q[s, s ^ (1 << i)] += p.delta
            else:
                k = sum(s >> j & 1 for j in range(n) if g.adjacency[i, j])
                if k:
                    Q[s, s | (1 << i)] += p.beta * k
        Q[s, s] = -Q[s].sum()
    p0 = np.zeros(size)
    p0[sum(int(v) << i for i, v in enumerate(x0))] = 1.0
    bits = state_bits(n)
    return np.array([(expm(Q.T * t) @ p0) @ bits for t in times])


def test_disease_free_start_has_no_events():
    assert gillespie_path(build_ring(5), ModelParams(2, 1), np.zeros(5), 10.0, seed=0) == []


def test_isolated_node_recovers_once():
    g = load_edge_list("", n=1)
    events = gillespie_path(g, ModelParams(1.0, 2.0), np.array([1.0]), 100.0, seed=3)
    assert len(events) == 1
    assert events[0].node == 0 and events[0].kind == RECOVER
    assert events[0].time > 0


def test_events_are_ordered_and_alternate_per_node():
    g = build_ring(6)
    x0 = np.array([1, 0, 0, 1, 0, 0], dtype=float)
    events = gillespie_path(g, ModelParams(1.5, 1.0), x0, 5.0, seed=7)
    times = [e.time for e in events]
    assert times == sorted(times) and times[-1] <= 5.0
    state = x0.astype(int).tolist()
    for e in events:
        assert e.kind == (RECOVER if state[e.node] else INFECT)
        state[e.node] ^= 1


def test_first_event_split_on_single_edge():
    g = build_complete(2)
    p = ModelParams(1.0, 1.0)
    trials = 4000
    first = [gillespie_path(g, p, np.array([1.0, 0.0]), 50.0, seed=s)[0] for s in range(trials)]
    recovered = sum(e.kind == RECOVER and e.node == 0 for e in first)
    infected = sum(e.kind == INFECT and e.node == 1 for e in first)
    assert recovered + infected == trials
    assert abs(recovered / trials - 0.5) < 3 * math.sqrt(0.25 / trials)


def test_waiting_times_are_exponential_with_total_rate():
    g = build_star(5)
    p = ModelParams(0.7, 1.3)
    x0 = np.array([1, 0, 1, 0, 0], dtype=float)
    # two recoveries; susceptible leaves 1, 3 and 4 each see the infected hub
    total = 2 * 1.3 + 3 * 0.7
    waits = [gillespie_path(g, p, x0, 100.0, seed=s)[0].time for s in range(10_000)]
    res = stats.kstest(waits, "expon", args=(0, 1 / total))
    assert res.pvalue > 0.01


def test_grid_sampling_holds_state_between_events():
    g = build_ring(4)
    p = ModelParams(1.0, 1.0)
    x0 = np.array([1.0, 0, 1, 0])
    events = gillespie_path(g, p, x0, 3.0, seed=11)
    times = np.linspace(0, 3, 301)
    grid = sample_on_grid(g, p, x0, times, seed=11)
    state = x0.astype(int).copy()
    pos = 0
    for k, t in enumerate(times):
        while pos < len(events) and events[pos].time <= t:
            state[events[pos].node] ^= 1
            pos += 1
        np.testing.assert_array_equal(grid[k], state)


def test_single_path_estimate_is_an_indicator():
    curve = exact_marginals_mc(build_ring(4), ModelParams(1, 1), np.array([1.0, 0, 0, 0]), TIMES, 1, seed=2)
    assert set(np.unique(curve.probs)) <= {0.0, 1.0}
    assert curve.paths == 1


def test_pure_death_estimate():
    g = load_edge_list("", n=1)
    curve = exact_marginals_mc(g, ModelParams(0.0, 1.0), np.array([1.0]), np.array([0.0, 1.0]), 100_000, seed=5)
    est = curve.probs[1, 0]
    se = math.sqrt(est * (1 - est) / 100_000)
    assert abs(est - math.exp(-1)) < 3 * se


def test_two_state_chain_marginal():
    g = load_edge_list("", n=1)
    curve = exact_marginals_ode(g, ModelParams(1.0, 1.7), np.array([1.0]), TIMES)
    np.testing.assert_allclose(curve.probs[:, 0], np.exp(-1.7 * TIMES), atol=1e-10)


def test_decoupled_nodes():
    g = build_ring(5)
    x0 = np.array([1.0, 0, 1, 1, 0])
    curve = exact_marginals_ode(g, ModelParams(0.0, 0.8), x0, TIMES)
    expected = np.outer(np.exp(-0.8 * TIMES), x0)
    np.testing.assert_allclose(curve.probs, expected, atol=1e-10)


@pytest.mark.parametrize("g,x0", [
    (build_complete(2), [1, 1]),
    (build_ring(4), [1, 0, 0, 0]),
    (build_star(5), [0, 1, 0, 0, 1]),
], ids=["k2", "ring4", "star5"])
def test_forward_equations_match_matrix_exponential(g, x0):
    p = ModelParams(1.0, 1.0)
    x0 = np.array(x0, dtype=float)
    got = exact_marginals_ode(g, p, x0, TIMES).probs
    np.testing.assert_allclose(got, _dense_marginals(g, p, x0, TIMES), atol=1e-9)


def test_generator_structure():
    Q = sis_generator(build_path(5), ModelParams(1.3, 0.4))
    assert Q.shape == (32, 32)
    np.testing.assert_allclose(np.asarray(Q.sum(axis=1)).ravel(), 0.0, atol=1e-12)
    off = Q - np.diag(Q.diagonal())
    assert off.min() >= 0
    # the empty state is absorbing
    assert Q[0].nnz == 0


def test_distribution_stays_normalised():
    g = build_complete(6)
    dist = exact_distribution(g, ModelParams(3.0, 1.0), np.ones(6), np.linspace(0, 5, 11))
    assert dist.min() >= -1e-12
    np.testing.assert_allclose(dist.sum(axis=1), 1.0, atol=1e-8)


def test_chain_size_limit():
    with pytest.raises(SizeError):
        sis_generator(build_ring(13), ModelParams(1, 1))


def test_initial_state_must_be_binary():
    with pytest.raises(ParameterError):
        gillespie_path(build_ring(4), ModelParams(1, 1), np.full(4, 0.5), 1.0, seed=0)
    with pytest.raises(ShapeError):
        exact_marginals_ode(build_ring(4), ModelParams(1, 1), np.ones(3), TIMES)


@pytest.mark.parametrize("g", [build_path(5), build_star(6)], ids=["path5", "star6"])
def test_monte_carlo_matches_forward_equations(g):
    p = ModelParams(1.2, 1.0)
    x0 = np.zeros(g.n)
    x0[0] = 1.0
    times = np.linspace(0.0, 2.0, 11)
    mc = exact_marginals_mc(g, p, x0, times, 3000, seed=21)
    ode = exact_marginals_ode(g, p, x0, times)
    # floor the half-width where the estimate degenerates to 0 or 1
    bound = 3 * np.maximum(mc.ci_halfwidth, 1.0 / mc.paths)
    assert np.all(np.abs(mc.probs - ode.probs) <= bound)


def test_bound_report_without_infection_channel():
    rep = nimfa_bound_report(build_ring(4), ModelParams(0.0, 1.0), np.array([1.0, 1, 0, 0]), TIMES)
    assert abs(rep.min_gap) < 1e-9


@pytest.mark.parametrize("beta,delta", [(1.0, 1.0), (0.2, 2.0), (4.0, 0.5)])
def test_bound_on_four_cycle_and_edge(beta, delta):
    p = ModelParams(beta, delta)
    assert nimfa_bound_report(build_ring(4), p, np.ones(4), TIMES).holds
    rep = nimfa_bound_report(build_complete(2), p, np.array([1.0, 0.0]), TIMES)
    assert rep.min_gap >= -1e-6
    assert rep.nimfa.shape == rep.exact.shape == (TIMES.size, 2)
