"""Exact SIS Markov chain on a graph.

Each infected node recovers at rate ``delta``; each susceptible node is
infected at rate ``beta`` times its number of infected neighbours. Two
independent routes give the marginals ``P(X_i(t) = 1)``: Gillespie sampling
and the 2^N-state forward (Kolmogorov) equations, which are used to check
that the mean-field solution bounds the exact marginals from above.

Joint states are indexed by the bitmask of infected nodes, node ``i`` being
bit ``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import IntegrationError, ParameterError, ShapeError, SizeError
from .graph import ContactGraph
from .model import ModelParams
from .nimfa import nimfa_drift, rk4_on_grid
from .seeding import derive_seed

MAX_EXACT_NODES = 12
MASS_TOL = 1e-8
RENORM_TOL = 1e-12
Z95 = 1.959963984540054

INFECT = "infect"
RECOVER = "recover"


class Event(NamedTuple):
    time: float
    node: int
    kind: str


def as_binary(x0, n: int) -> np.ndarray:
    x = np.asarray(x0, dtype=np.float64)
    if x.shape != (n,):
        raise ShapeError(f"initial state has shape {x.shape}, graph has {n} nodes")
    if not np.all((x == 0.0) | (x == 1.0)):
        raise ParameterError("exact-chain initial state must have entries exactly 0 or 1")
    return x.astype(np.int8)


def _run_direct_method(neighbors, beta, delta, state, t_end, rng, on_event):
    """Direct-method SSA; ``state`` is a list of 0/1 and is mutated in place."""
    n = len(state)
    inf_nbrs = [sum(state[j] for j in neighbors[i]) for i in range(n)]
    rates = [delta if state[i] else beta * inf_nbrs[i] for i in range(n)]
    t = 0.0
    while True:
        total = math.fsum(rates)
        if total <= 0.0:
            return
        t += rng.exponential() / total
        if t > t_end:
            return
        target = rng.random() * total
        acc = 0.0
        node = n - 1
        for i in range(n):
            acc += rates[i]
            if target < acc:
                node = i
                break
        while rates[node] == 0.0:  # round-off landed past the last positive rate
            node -= 1
        if state[node]:
            state[node] = 0
            rates[node] = beta * inf_nbrs[node]
            delta_inf = -1
            kind = RECOVER
        else:
            state[node] = 1
            rates[node] = delta
            delta_inf = 1
            kind = INFECT
        for j in neighbors[node]:
            inf_nbrs[j] += delta_inf
            if not state[j]:
                rates[j] = beta * inf_nbrs[j]
        on_event(t, node, kind)


def _neighbor_lists(g: ContactGraph) -> list[list[int]]:
    indptr, indices = g.csr
    return [indices[indptr[i]:indptr[i + 1]].tolist() for i in range(g.n)]


def gillespie_path(g: ContactGraph, p: ModelParams, x0, t_end: float, seed: int) -> list[Event]:
    """Event sequence of one exact SIS realisation on ``[0, t_end]``."""
    if not t_end > 0:
        raise ParameterError("t_end must be positive")
    state = as_binary(x0, g.n).tolist()
    rng = np.random.default_rng(seed)
    events: list[Event] = []
    _run_direct_method(_neighbor_lists(g), p.beta, p.delta, state, t_end, rng,
                       lambda t, i, k: events.append(Event(t, i, k)))
    return events


def sample_on_grid(g: ContactGraph, p: ModelParams, x0, times, seed: int, neighbors=None) -> np.ndarray:
    """Exact path read at ``times`` (right-continuous, constant between events)."""
    times = np.asarray(times, dtype=np.float64)
    state = as_binary(x0, g.n).tolist()
    lagged = list(state)
    out = np.empty((times.size, g.n), dtype=np.int8)
    pos = 0

    def record(t, node, kind):
        nonlocal pos
        while pos < times.size and times[pos] < t:
            out[pos] = lagged
            pos += 1
        lagged[node] = state[node]

    rng = np.random.default_rng(seed)
    _run_direct_method(neighbors or _neighbor_lists(g), p.beta, p.delta, state,
                       float(times[-1]), rng, record)
    out[pos:] = state
    return out


@dataclass
class MarginalCurve:
    times: np.ndarray
    probs: np.ndarray
    ci_halfwidth: np.ndarray
    paths: int | None = None


def exact_marginals_mc(g: ContactGraph, p: ModelParams, x0, times, paths: int, seed: int) -> MarginalCurve:
    """Monte Carlo estimate of ``P(X_i(t) = 1)`` with 95% normal-approximation half-widths.

    Path ``k`` uses seed ``derive_seed(seed, k)``.
    """
    if paths < 1:
        raise ParameterError("paths must be >= 1")
    times = np.asarray(times, dtype=np.float64)
    as_binary(x0, g.n)
    nbrs = _neighbor_lists(g)
    acc = np.zeros((times.size, g.n))
    for k in range(paths):
        acc += sample_on_grid(g, p, x0, times, derive_seed(seed, k), neighbors=nbrs)
    probs = acc / paths
    half = Z95 * np.sqrt(probs * (1.0 - probs) / paths)
    return MarginalCurve(times, probs, half, paths)


def state_bits(n: int) -> np.ndarray:
    """``(2^n, n)`` 0/1 matrix; row ``s`` holds the bits of ``s``."""
    s = np.arange(1 << n)
    return ((s[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)


def sis_generator(g: ContactGraph, p: ModelParams) -> sp.csr_matrix:
    """Sparse ``2^N x 2^N`` rate matrix ``Q`` (rows are source states, rows sum to 0)."""
    n = g.n
    if n > MAX_EXACT_NODES:
        raise SizeError(f"exact chain limited to {MAX_EXACT_NODES} nodes, got {n}")
    bits = state_bits(n)
    n_states = bits.shape[0]
    inf_nbrs = bits @ g.adjacency
    src = np.arange(n_states)
    rows, cols, vals = [], [], []
    for i in range(n):
        infected = bits[:, i] == 1.0
        rec = src[infected]
        rows.append(rec)
        cols.append(rec ^ (1 << i))
        vals.append(np.full(rec.size, p.delta))
        sus = src[~infected]
        rate = p.beta * inf_nbrs[sus, i]
        keep = rate > 0
        rows.append(sus[keep])
        cols.append(sus[keep] | (1 << i))
        vals.append(rate[keep])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    off = sp.csr_matrix((vals, (rows, cols)), shape=(n_states, n_states))
    exit_rate = np.asarray(off.sum(axis=1)).ravel()
    return (off - sp.diags(exit_rate)).tocsr()


def exact_distribution(g: ContactGraph, p: ModelParams, x0, times, max_dt: float = 1e-3) -> np.ndarray:
    """Joint-state probabilities at each grid time, shape ``(len(times), 2^N)``.

    RK4 on ``dp/dt = Q^T p`` from the point mass at ``x0``. Substeps are capped
    at ``max_dt`` and at ``0.05 / max exit rate``.
    """
    x = as_binary(x0, g.n)
    Q = sis_generator(g, p)
    QT = Q.T.tocsr()
    max_rate = float(-Q.diagonal().min()) if Q.shape[0] > 1 else 0.0
    h = max_dt if max_rate == 0 else min(max_dt, 0.05 / max_rate)
    p0 = np.zeros(Q.shape[0])
    p0[int(np.dot(x.astype(np.int64), 1 << np.arange(g.n)))] = 1.0

    def renorm(v):
        total = v.sum()
        err = abs(total - 1.0)
        if err > MASS_TOL:
            raise IntegrationError(f"probability mass drifted by {err:.3e}")
        if err > RENORM_TOL:
            v = v / total
        return v

    return rk4_on_grid(lambda v: QT @ v, p0, times, h, post=renorm)


def exact_marginals_ode(g: ContactGraph, p: ModelParams, x0, times, max_dt: float = 1e-3) -> MarginalCurve:
    times = np.asarray(times, dtype=np.float64)
    dist = exact_distribution(g, p, x0, times, max_dt=max_dt)
    probs = dist @ state_bits(g.n)
    return MarginalCurve(times, probs, np.zeros_like(probs), None)


@dataclass
class NimfaBoundReport:
    min_gap: float
    node: int
    time: float
    times: np.ndarray
    nimfa: np.ndarray
    exact: np.ndarray

    @property
    def holds(self) -> bool:
        return self.min_gap >= -1e-6


def nimfa_bound_report(g: ContactGraph, p: ModelParams, x0, times, max_dt: float = 1e-3) -> NimfaBoundReport:
    """Smallest ``x_i^NIMFA(t) - P(X_i(t) = 1)`` over nodes and grid times.

    Both systems use RK4 with the same substep so they share the grid exactly.
    """
    times = np.asarray(times, dtype=np.float64)
    xb = as_binary(x0, g.n).astype(np.float64)
    Q = sis_generator(g, p)
    max_rate = float(-Q.diagonal().min()) if Q.shape[0] > 1 else 0.0
    h = max_dt if max_rate == 0 else min(max_dt, 0.05 / max_rate)
    exact = exact_marginals_ode(g, p, xb, times, max_dt=h).probs
    nimfa = rk4_on_grid(lambda y: nimfa_drift(g, p, y), xb, times, h)
    gap = nimfa - exact
    k, i = np.unravel_index(int(np.argmin(gap)), gap.shape)
    return NimfaBoundReport(float(gap[k, i]), int(i), float(times[k]), times, nimfa, exact)
