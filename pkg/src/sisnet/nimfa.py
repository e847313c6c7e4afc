"""Deterministic N-intertwined mean-field (NIMFA) dynamics.

    dx_i/dt = beta * s_i * (1 - x_i) - delta * x_i,    s_i = sum_j a_ij x_j
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, InstabilityError, ParameterError, ShapeError, UndefinedThresholdError
from .graph import ContactGraph, SpectralData
from .model import ModelParams, as_state

DEFAULT_DT = 1e-3
DEFAULT_SAVE_EVERY = 10
# Round-off allowance before an exit from [0, 1] counts as instability.
BOUNDARY_SLACK = 1e-12


@dataclass
class Trajectory:
    """Saved grid times and one state row per time."""

    times: np.ndarray
    states: np.ndarray
    scheme: str
    dt: float
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ShapeError("times and states must have equal length")

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def infection_strength(g: ContactGraph, x: np.ndarray) -> np.ndarray:
    """Expected number of infected neighbours ``s = A x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != g.n:
        raise ShapeError(f"state has {x.shape[-1]} entries, graph has {g.n} nodes")
    return x @ g.adjacency


def nimfa_drift(g: ContactGraph, p: ModelParams, x, return_strength: bool = False):
    x = np.asarray(x, dtype=np.float64)
    s = infection_strength(g, x)
    f = p.beta * s * (1.0 - x) - p.delta * x
    if return_strength:
        return f, s
    return f


def nimfa_threshold(s: SpectralData) -> float:
    """First-order mean-field epidemic threshold ``1 / lambda_1``."""
    if s.lambda1 <= 0:
        raise UndefinedThresholdError("spectral radius is zero (graph has no edges); threshold undefined")
    return 1.0 / s.lambda1


def step_schedule(t_end: float, dt: float) -> tuple[int, float]:
    """Number of steps and the length of the final one.

    The final step is shortened when ``t_end`` is not a whole multiple of ``dt``.
    """
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if not t_end >= dt * (1 - 1e-12):
        raise ParameterError(f"t_end={t_end} must be at least dt={dt}")
    ratio = t_end / dt
    k = round(ratio)
    if abs(ratio - k) <= 1e-9 * max(1.0, ratio):
        return int(k), dt
    k = math.ceil(ratio)
    return int(k), t_end - (k - 1) * dt


def _rk4_step(rhs, y, h):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_on_grid(rhs, y0: np.ndarray, times: np.ndarray, max_dt: float, post=None) -> np.ndarray:
    """Integrate ``y' = rhs(y)`` with classical RK4, sampling at ``times``.

    Each grid interval is split into the fewest equal substeps no longer than
    ``max_dt``. ``post`` is applied after every substep.
    """
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size < 1:
        raise ParameterError("time grid must be a non-empty 1-d array")
    if np.any(np.diff(times) <= 0):
        raise ParameterError("time grid must be strictly increasing")
    out = np.empty((times.size,) + np.shape(y0))
    y = np.array(y0, dtype=np.float64)
    out[0] = y
    for k in range(1, times.size):
        span = times[k] - times[k - 1]
        m = max(1, math.ceil(span / max_dt - 1e-9))
        h = span / m
        for _ in range(m):
            y = _rk4_step(rhs, y, h)
            if post is not None:
                y = post(y)
        out[k] = y
    return out


def _guard_unit_cube(x: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise InstabilityError("non-finite state; reduce dt")
    if x.min() < -BOUNDARY_SLACK or x.max() > 1.0 + BOUNDARY_SLACK:
        raise InstabilityError(
            f"state left [0, 1] (min {x.min():.3e}, max {x.max():.6f}); reduce dt"
        )
    return np.clip(x, 0.0, 1.0)


def integrate_nimfa(
    g: ContactGraph,
    p: ModelParams,
    x0,
    t_end: float,
    dt: float = DEFAULT_DT,
    save_every: int = DEFAULT_SAVE_EVERY,
    scheme: str = "rk4",
) -> Trajectory:
    """Fixed-step integration of the mean-field system from ``t = 0``.

    ``scheme`` is ``"rk4"`` (default) or ``"euler"``. The initial state, every
    ``save_every``-th step and the final state are saved.
    """
    x = as_state(x0, g.n).copy()
    if save_every < 1:
        raise ParameterError("save_every must be >= 1")
    if scheme not in ("rk4", "euler"):
        raise ParameterError(f"unknown scheme {scheme!r}")
    n_steps, last_dt = step_schedule(t_end, dt)

    def rhs(y):
        return nimfa_drift(g, p, y)

    times = [0.0]
    states = [x.copy()]
    for k in range(1, n_steps + 1):
        h = last_dt if k == n_steps else dt
        if scheme == "rk4":
            x = _rk4_step(rhs, x, h)
        else:
            x = x + h * rhs(x)
        x = _guard_unit_cube(x)
        if k % save_every == 0 or k == n_steps:
            times.append(t_end if k == n_steps else k * dt)
            states.append(x.copy())
    return Trajectory(np.array(times), np.array(states), scheme=scheme, dt=dt)


@dataclass
class EquilibriumResult:
    x: np.ndarray
    below_threshold: bool
    iterations: int
    residual: float


def endemic_equilibrium(
    g: ContactGraph,
    p: ModelParams,
    tol: float = 1e-12,
    max_iter: int = 200_000,
    damping: float = 0.7,
) -> EquilibriumResult:
    """Maximal fixed point of ``x_i = beta s_i / (delta + beta s_i)``.

    Damped iteration from ``x = 1`` descends monotonically onto the largest
    equilibrium. At or below the mean-field threshold the zero vector is
    returned with ``below_threshold=True``.

    Iteration stops once the update is below ``tol`` and the mean-field drift
    at the iterate is below ``10 * tol`` in sup norm.
    """
    lam = g.spectral.lambda1
    if lam <= 0 or p.tau <= 1.0 / lam:
        return EquilibriumResult(np.zeros(g.n), True, 0, 0.0)
    x = np.ones(g.n)
    for it in range(1, max_iter + 1):
        bs = p.beta * infection_strength(g, x)
        x_new = (1.0 - damping) * x + damping * bs / (p.delta + bs)
        step = float(np.max(np.abs(x_new - x)))
        x = x_new
        if step <= tol and float(np.max(np.abs(nimfa_drift(g, p, x)))) <= 10 * tol:
            return EquilibriumResult(x, False, it, step)
    raise ConvergenceError(
        f"equilibrium iteration did not converge in {max_iter} steps (last update {step:.3e})",
        residual=step,
        iterations=max_iter,
    )


def regular_equilibrium(degree: int, p: ModelParams) -> float:
    """Symmetric endemic level ``1 - delta / (beta k)`` of a k-regular graph."""
    return max(0.0, 1.0 - p.delta / (p.beta * degree)) if p.beta > 0 else 0.0
