"""Mean-field SIS with white-noise infection rates, integrated by Euler-Maruyama.

    dx_i = [beta s_i (1 - x_i) - delta x_i] dt + sigma_i(x_i) s_i (1 - x_i) dw_i

The continuous solution never leaves [0, 1]^N, so a discrete step that does
is clamped back componentwise and the event is counted. Both drift and
diffusion vanish at x = 0, so the disease-free state stays absorbing under
the scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import NumericalError, ParameterError, ShapeError
from .graph import ContactGraph, SpectralData
from .model import ModelParams, as_state
from .nimfa import Trajectory, infection_strength, nimfa_drift, step_schedule

DEFAULT_DT = 1e-4
DEFAULT_SAVE_EVERY = 100
# Steps of Gaussian increments drawn per RNG call.
_CHUNK = 8192


def diffusion(g: ContactGraph, p: ModelParams, x) -> np.ndarray:
    """Diagonal of the diffusion matrix, ``sigma_i(x_i) s_i (1 - x_i)``."""
    x = np.asarray(x, dtype=np.float64)
    s = infection_strength(g, x)
    levels = p.noise.levels_for(g.n)
    return p.noise.sigma(x, levels) * s * (1.0 - x)


def em_step(g: ContactGraph, p: ModelParams, x, dt: float, dW) -> tuple[np.ndarray, int]:
    """One Euler-Maruyama step; returns the clamped state and the number of clamps."""
    x = np.asarray(x, dtype=np.float64)
    dW = np.asarray(dW, dtype=np.float64)
    if dt <= 0:
        raise ParameterError("dt must be positive")
    x_new = x + nimfa_drift(g, p, x) * dt + diffusion(g, p, x) * dW
    if not np.all(np.isfinite(x_new)):
        raise NumericalError("non-finite Euler-Maruyama increment")
    clamps = int(np.count_nonzero(x_new < 0.0) + np.count_nonzero(x_new > 1.0))
    return np.clip(x_new, 0.0, 1.0), clamps


@njit(cache=True, nogil=True)
def _em_chunk(x, z, dt, sqdt, beta, delta, levels, logistic, indptr, indices, s,
              clamps, step0, save_every, out, n_out):
    """Advance a batch of paths ``x[node, path]`` through ``z.shape[1]`` steps.

    Neighbour sums run with the path axis innermost; every path still sees the
    same arithmetic in the same order whatever the batch size.
    """
    n, b = x.shape
    for k in range(z.shape[1]):
        for i in range(n):
            for c in range(b):
                s[i, c] = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                j = indices[jj]
                for c in range(b):
                    s[i, c] += x[j, c]
        for c in range(b):
            for i in range(n):
                xi = x[i, c]
                si = s[i, c]
                om = 1.0 - xi
                sig = levels[i] * xi
                if logistic:
                    sig = sig * om
                f = beta * si * om - delta * xi
                gi = sig * si * om
                xn = xi + f * dt + gi * (sqdt * z[c, k, i])
                if not np.isfinite(xn):
                    return n_out, True
                if xn < 0.0:
                    xn = 0.0
                    clamps[c] += 1
                elif xn > 1.0:
                    xn = 1.0
                    clamps[c] += 1
                x[i, c] = xn
        if (step0 + k + 1) % save_every == 0:
            out[n_out, :, :] = x
            n_out += 1
    return n_out, False


@dataclass
class SdePath:
    trajectory: Trajectory
    clamp_events: int
    seed: int
    dt: float
    steps: int

    @property
    def clamp_rate(self) -> float:
        """Clamps per component-step."""
        return self.clamp_events / (self.steps * self.trajectory.n)


def _draw(rngs, k: int, n: int, buf: np.ndarray | None = None) -> np.ndarray:
    """Standard normals laid out ``z[path, step, node]``."""
    z = buf[:, :k, :] if buf is not None else np.empty((len(rngs), k, n))
    for c, rng in enumerate(rngs):
        rng.standard_normal(out=z[c])
    return z


def simulate_batch(
    g: ContactGraph,
    p: ModelParams,
    x0,
    t_end: float,
    dt: float,
    save_every: int,
    seeds,
) -> list[SdePath]:
    """Independent Euler-Maruyama paths, one per seed, stepped together.

    Path ``c`` draws its increments from ``numpy.random.default_rng(seeds[c])``
    in blocks of steps, one standard normal per node per step, so each path is
    bit-identical to ``simulate_sde(..., seed=seeds[c])``.
    """
    x0 = as_state(x0, g.n)
    if save_every < 1:
        raise ParameterError("save_every must be >= 1")
    seeds = [int(s) for s in seeds]
    b = len(seeds)
    n_steps, last_dt = step_schedule(t_end, dt)
    rngs = [np.random.default_rng(s) for s in seeds]
    indptr, indices = g.csr
    levels = p.noise.levels_for(g.n)
    logistic = p.noise.model == "logistic"
    n_full = n_steps if last_dt == dt else n_steps - 1

    x = np.repeat(x0[:, None], b, axis=1)
    out = np.empty((n_steps // save_every + 2, g.n, b))
    out[0] = x
    n_out = 1
    s_buf = np.empty((g.n, b))
    clamps = np.zeros(b, dtype=np.int64)
    done = 0
    sqdt = np.sqrt(dt)
    zbuf = np.empty((b, min(_CHUNK, max(n_full, 1)), g.n))
    while done < n_full:
        k = min(_CHUNK, n_full - done)
        n_out, bad = _em_chunk(x, _draw(rngs, k, g.n, zbuf), dt, sqdt, p.beta, p.delta, levels, logistic,
                               indptr, indices, s_buf, clamps, done, save_every, out, n_out)
        if bad:
            raise NumericalError("non-finite Euler-Maruyama increment; reduce dt")
        done += k
    if n_full < n_steps:
        # step0=-1 with save_every=1 forces the shortened final step to be saved
        n_out, bad = _em_chunk(x, _draw(rngs, 1, g.n), last_dt, np.sqrt(last_dt), p.beta, p.delta,
                               levels, logistic, indptr, indices, s_buf, clamps, -1, 1, out, n_out)
        if bad:
            raise NumericalError("non-finite Euler-Maruyama increment; reduce dt")
    elif n_steps % save_every != 0:
        out[n_out] = x
        n_out += 1

    saved_steps = list(range(save_every, n_steps + 1, save_every))
    if not saved_steps or saved_steps[-1] != n_steps:
        saved_steps.append(n_steps)
    times = np.array([0.0] + [t_end if k == n_steps else k * dt for k in saved_steps])
    result = []
    for c, seed in enumerate(seeds):
        states = np.ascontiguousarray(out[:n_out, :, c])
        traj = Trajectory(times.copy(), states, scheme="euler-maruyama", dt=dt, seed=seed)
        result.append(SdePath(traj, int(clamps[c]), seed, dt, n_steps))
    return result


def simulate_sde(
    g: ContactGraph,
    p: ModelParams,
    x0,
    t_end: float,
    dt: float = DEFAULT_DT,
    save_every: int = DEFAULT_SAVE_EVERY,
    seed: int = 0,
) -> SdePath:
    """Single Euler-Maruyama path on a fixed grid; equal inputs give bit-identical paths."""
    return simulate_batch(g, p, x0, t_end, dt, save_every, [seed])[0]


def simulate_with_increments(g: ContactGraph, p: ModelParams, x0, dt: float, dW) -> tuple[np.ndarray, np.ndarray]:
    """Euler-Maruyama endpoints driven by given Brownian increments.

    ``dW`` has shape ``(paths, steps, N)`` with variance ``dt`` per entry.
    Summing blocks of a fine ``dW`` gives coarse runs that share the same
    noise. Returns the final states ``(paths, N)`` and clamp counts per path.
    """
    x0 = as_state(x0, g.n)
    dW = np.asarray(dW, dtype=np.float64)
    if dW.ndim != 3 or dW.shape[2] != g.n:
        raise ShapeError(f"increments must have shape (paths, steps, {g.n}), got {dW.shape}")
    if dt <= 0:
        raise ParameterError("dt must be positive")
    b, steps, _ = dW.shape
    sqdt = np.sqrt(dt)
    z = np.ascontiguousarray(dW / sqdt)
    indptr, indices = g.csr
    x = np.repeat(x0[:, None], b, axis=1)
    clamps = np.zeros(b, dtype=np.int64)
    out = np.empty((1, g.n, b))
    _, bad = _em_chunk(x, z, dt, sqdt, p.beta, p.delta, p.noise.levels_for(g.n), p.noise.model == "logistic",
                       indptr, indices, np.empty((g.n, b)), clamps, 0, steps + 1, out, 0)
    if bad:
        raise NumericalError("non-finite Euler-Maruyama increment; reduce dt")
    return np.ascontiguousarray(x.T), clamps


def lyapunov_drift_constant(p: ModelParams, s: SpectralData) -> float:
    """``C = 2 beta lambda_1 - 2 delta + M^2 lambda_1^2 / 16``.

    ``L|X|^2 <= C |X|^2`` on the unit cube, so ``C < 0`` gives almost-sure
    extinction.
    """
    lam = s.lambda1
    return 2.0 * p.beta * lam - 2.0 * p.delta + p.cap**2 * lam**2 / 16.0


def generator_of_norm(g: ContactGraph, p: ModelParams, X: np.ndarray) -> np.ndarray:
    """Generator of the SDE applied to ``V(X) = |X|^2``, evaluated row-wise.

    ``LV = 2 beta sum x_i s_i - 2 delta |X|^2 - 2 beta sum x_i^2 s_i
    + sum sigma_i(x_i)^2 (1 - x_i)^2 s_i^2``
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    s = infection_strength(g, X)
    levels = p.noise.levels_for(g.n)
    sig = p.noise.sigma(X, levels)
    return (
        2.0 * p.beta * np.sum(X * s, axis=1)
        - 2.0 * p.delta * np.sum(X * X, axis=1)
        - 2.0 * p.beta * np.sum(X * X * s, axis=1)
        + np.sum(sig**2 * (1.0 - X) ** 2 * s**2, axis=1)
    )


@dataclass
class GeneratorCheck:
    drift_C: float
    max_violation: float
    worst_sample: np.ndarray
    samples: int

    @property
    def holds(self) -> bool:
        return self.max_violation <= 0.0


def empirical_generator_check(
    g: ContactGraph, p: ModelParams, samples: int, seed: int = 0, batch: int = 10_000
) -> GeneratorCheck:
    """Largest ``LV(X) - C |X|^2`` over uniform samples of the unit cube."""
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    C = lyapunov_drift_constant(p, g.spectral)
    rng = np.random.default_rng(seed)
    worst = -np.inf
    worst_x = None
    left = samples
    while left > 0:
        k = min(batch, left)
        X = rng.random((k, g.n))
        viol = generator_of_norm(g, p, X) - C * np.sum(X * X, axis=1)
        j = int(np.argmax(viol))
        if viol[j] > worst:
            worst = float(viol[j])
            worst_x = X[j].copy()
        left -= k
    return GeneratorCheck(C, worst, worst_x, samples)
