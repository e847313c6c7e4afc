"""Monte Carlo ensembles of Euler-Maruyama paths.

Path ``k`` of an ensemble with master seed ``m`` is exactly
``simulate_sde(..., seed=derive_seed(m, k))``. Results are collected by path
index, so they do not depend on the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .graph import ContactGraph
from .model import ModelParams
from .nimfa import Trajectory
from .sde import DEFAULT_DT, DEFAULT_SAVE_EVERY, SdePath, simulate_batch
from .seeding import derive_seed

# Paths stepped together per kernel call; any value gives identical paths.
BLOCK = 32


def simulate_paths(
    g: ContactGraph,
    p: ModelParams,
    x0,
    t_end: float,
    dt: float = DEFAULT_DT,
    save_every: int = DEFAULT_SAVE_EVERY,
    paths: int = 100,
    master_seed: int = 0,
    workers: int = 1,
) -> list[SdePath]:
    if paths < 1:
        raise ParameterError("paths must be >= 1")
    seeds = [derive_seed(master_seed, k) for k in range(paths)]
    blocks = [seeds[i:i + BLOCK] for i in range(0, paths, BLOCK)]

    def one(block):
        return simulate_batch(g, p, x0, t_end, dt, save_every, block)

    if workers <= 1:
        parts = [one(b) for b in blocks]
    else:
        # the EM kernel releases the GIL, so threads run blocks in parallel
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, blocks))
    return [path for part in parts for path in part]


def nearest_rank(sorted_values: np.ndarray, q: float) -> np.ndarray:
    """Nearest-rank quantile along axis 0 of already sorted data."""
    n = sorted_values.shape[0]
    k = max(1, math.ceil(q * n))
    return sorted_values[k - 1]


@dataclass
class EnsembleStats:
    times: np.ndarray
    mean: np.ndarray
    q05: np.ndarray
    q50: np.ndarray
    q95: np.ndarray
    norm_q05: np.ndarray
    norm_q50: np.ndarray
    norm_q95: np.ndarray
    norm_mean: np.ndarray
    paths: int
    master_seed: int
    clamp_events: int
    steps: int
    members: list[SdePath] | None = field(default=None, repr=False)

    @property
    def clamp_rate(self) -> float:
        return self.clamp_events / (self.steps * self.paths * self.mean.shape[1])

    def norm_stderr(self) -> np.ndarray:
        """Standard error of ``norm_mean`` at each saved time (needs members)."""
        if self.members is None:
            raise ParameterError("standard error needs the member paths (keep_paths=True)")
        norms = np.stack([np.linalg.norm(m.trajectory.states, axis=1) for m in self.members])
        return norms.std(axis=0, ddof=1) / math.sqrt(self.paths)


def summarize(members: list[SdePath], master_seed: int) -> EnsembleStats:
    if not members:
        raise ParameterError("cannot summarise an empty ensemble")
    times = members[0].trajectory.times
    stack = np.stack([m.trajectory.states for m in members])
    norms = np.linalg.norm(stack, axis=2)
    srt = np.sort(stack, axis=0)
    nsrt = np.sort(norms, axis=0)
    return EnsembleStats(
        times=times,
        mean=stack.mean(axis=0),
        q05=nearest_rank(srt, 0.05),
        q50=nearest_rank(srt, 0.50),
        q95=nearest_rank(srt, 0.95),
        norm_q05=nearest_rank(nsrt, 0.05),
        norm_q50=nearest_rank(nsrt, 0.50),
        norm_q95=nearest_rank(nsrt, 0.95),
        norm_mean=norms.mean(axis=0),
        paths=len(members),
        master_seed=master_seed,
        clamp_events=sum(m.clamp_events for m in members),
        steps=members[0].steps,
    )


def run_ensemble(
    g: ContactGraph,
    p: ModelParams,
    x0,
    t_end: float,
    dt: float = DEFAULT_DT,
    save_every: int = DEFAULT_SAVE_EVERY,
    paths: int = 100,
    master_seed: int = 0,
    workers: int = 1,
    keep_paths: bool = False,
) -> EnsembleStats:
    members = simulate_paths(g, p, x0, t_end, dt, save_every, paths, master_seed, workers)
    stats = summarize(members, master_seed)
    if keep_paths:
        stats.members = members
    return stats


def _trajectory(path) -> Trajectory:
    return path.trajectory if isinstance(path, SdePath) else path


def extinction_time(path, tol: float, hold: float) -> float | None:
    """First saved time after which ``max_i x_i < tol`` for ``hold`` time units.

    The whole hold window must fit inside the saved horizon.
    """
    if tol <= 0 or hold <= 0:
        raise ParameterError("tol and hold must be positive")
    traj = _trajectory(path)
    t = traj.times
    if hold > t[-1] - t[0]:
        raise ParameterError(f"hold={hold} exceeds the run horizon {t[-1] - t[0]}")
    below = traj.states.max(axis=1) < tol
    eps = 1e-9 * max(1.0, abs(t[-1]))
    # last saved index inside [t_k, t_k + hold]
    last = np.searchsorted(t, t + hold + eps, side="right") - 1
    # run[k] = length of the run of consecutive below-tol points starting at k
    run = np.zeros(t.size + 1, dtype=np.int64)
    for k in range(t.size - 1, -1, -1):
        run[k] = run[k + 1] + 1 if below[k] else 0
    for k in range(t.size):
        if t[k] + hold > t[-1] + eps:
            break
        if k + run[k] - 1 >= last[k]:
            return float(t[k])
    return None


@dataclass
class PermanenceEstimate:
    chi: float
    window: tuple[float, float]
    frac: float
    paths: int

    @property
    def eps_hat(self) -> float:
        return 1.0 - self.frac


def permanence_estimate(paths, chi: float, window: tuple[float, float] | None = None) -> PermanenceEstimate:
    """Fraction of paths whose norm ``|X(t)|`` stays ``>= chi`` throughout ``window``.

    ``window`` defaults to the last half of the horizon.
    """
    if chi <= 0:
        raise ParameterError("chi must be positive")
    trajs = [_trajectory(p) for p in paths]
    if not trajs:
        raise ParameterError("no paths given")
    t = trajs[0].times
    if window is None:
        window = (t[0] + 0.5 * (t[-1] - t[0]), t[-1])
    ta, tb = window
    if not ta < tb:
        raise ParameterError("window must satisfy t_a < t_b")
    if ta < t[0] - 1e-12 or tb > t[-1] + 1e-12:
        raise ParameterError(f"window {window} outside the horizon [{t[0]}, {t[-1]}]")
    sel = (t >= ta - 1e-12) & (t <= tb + 1e-12)
    if not np.any(sel):
        raise ParameterError("window contains no saved grid points")
    ok = [np.all(np.linalg.norm(tr.states[sel], axis=1) >= chi) for tr in trajs]
    return PermanenceEstimate(chi, (float(ta), float(tb)), float(np.mean(ok)), len(trajs))
