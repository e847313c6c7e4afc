"""Model parameters: infection and recovery rates plus the noise settings."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError

NOISE_MODELS = ("linear", "logistic")


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Per-node noise levels ``m_i`` under a global cap ``M``.

    ``linear`` uses ``sigma_i(x) = m_i x`` and ``logistic`` uses
    ``sigma_i(x) = m_i x (1 - x)``. Both satisfy ``sigma_i(x) / x <= m_i <= M``
    on ``(0, 1)``. ``levels=None`` means every node sits at the cap.
    """

    cap: float = 0.0
    levels: float | np.ndarray | None = None
    model: str = "linear"

    def __post_init__(self):
        if self.model not in NOISE_MODELS:
            raise ParameterError(f"unknown noise model {self.model!r}; expected one of {NOISE_MODELS}")
        if not np.isfinite(self.cap) or self.cap < 0:
            raise ParameterError(f"noise cap must be finite and >= 0, got {self.cap}")
        if self.levels is not None:
            lv = np.array(self.levels, dtype=np.float64, copy=True)
            if lv.ndim > 1:
                raise ShapeError("noise levels must be a scalar or a vector")
            if np.any(~np.isfinite(lv)) or np.any(lv < 0):
                raise ParameterError("noise levels must be finite and >= 0")
            if np.any(lv > self.cap):
                worst = float(np.max(lv))
                raise ParameterError(
                    f"noise level {worst:g} exceeds the cap M={self.cap:g}; "
                    "sup sigma_i(x)/x over (0,1) must not exceed M"
                )
            lv.setflags(write=False)
            object.__setattr__(self, "levels", lv)

    def levels_for(self, n: int) -> np.ndarray:
        if self.levels is None:
            return np.full(n, float(self.cap))
        lv = self.levels
        if lv.ndim == 0:
            return np.full(n, float(lv))
        if lv.shape[0] != n:
            raise ShapeError(f"{lv.shape[0]} noise levels given for a graph with {n} nodes")
        return np.array(lv)

    def sigma(self, x: np.ndarray, levels: np.ndarray) -> np.ndarray:
        if self.model == "linear":
            return levels * x
        return levels * x * (1.0 - x)

    def to_dict(self) -> dict:
        m = self.cap if self.levels is None else (
            float(self.levels) if self.levels.ndim == 0 else self.levels.tolist()
        )
        return {"model": self.model, "m": m, "cap": float(self.cap)}


@dataclass(frozen=True)
class ModelParams:
    """Infection rate ``beta``, recovery rate ``delta`` and the noise settings.

    ``beta = 0`` is allowed so the exact and mean-field models can be checked
    in their decoupled limit.
    """

    beta: float
    delta: float
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ParameterError(f"beta must be finite and >= 0, got {self.beta}")
        if not np.isfinite(self.delta) or self.delta <= 0:
            raise ParameterError(f"delta must be finite and > 0, got {self.delta}")

    @property
    def tau(self) -> float:
        """Effective infection rate beta / delta."""
        return self.beta / self.delta

    @property
    def cap(self) -> float:
        return float(self.noise.cap)

    def with_noise(self, cap: float, levels=None, model: str = "linear") -> ModelParams:
        return ModelParams(self.beta, self.delta, NoiseSpec(cap=cap, levels=levels, model=model))


def as_state(x, n: int) -> np.ndarray:
    """Validate a state vector of per-node infection probabilities."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise ShapeError(f"state has shape {x.shape}, graph has {n} nodes")
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise ParameterError("state entries must lie in [0, 1]")
    return x
