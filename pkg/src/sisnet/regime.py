"""Extinction / permanence threshold algebra.

With effective rate ``tau = beta / delta`` and noise cap ``M``::

    tau_cs = 1/lambda_1 - M^2 lambda_1 / (32 delta)    (extinction below)
    tau_ps = 1/lambda_1 + M^2 lambda_1 / (32 delta)    (permanence above)

Both are sufficient conditions stated with strict inequalities, so a rate
sitting on either threshold (within ``TIE_TOL``) is reported as ``Gap``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .errors import UndefinedThresholdError
from .graph import SpectralData
from .model import ModelParams
from .sde import lyapunov_drift_constant

EXTINCTION = "Extinction"
GAP = "Gap"
PERMANENCE = "Permanence"

TIE_TOL = 1e-12


@dataclass(frozen=True)
class RegimeReport:
    tau: float
    tau_c1: float
    tau_cs: float
    tau_ps: float
    drift_C: float
    label: str
    margin: float

    @property
    def gap_width(self) -> float:
        return self.tau_ps - self.tau_cs

    def to_dict(self) -> dict:
        return asdict(self)

    def format(self, digits: int = 6) -> str:
        rows = [
            ("tau", f"{self.tau:.{digits}f}"),
            ("tau_c1", f"{self.tau_c1:.{digits}f}"),
            ("tau_cs", f"{self.tau_cs:.{digits}f}"),
            ("tau_ps", f"{self.tau_ps:.{digits}f}"),
            ("drift_C", f"{self.drift_C:.{digits}f}"),
            ("label", self.label),
            ("margin", f"{self.margin:.{digits}f}"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}} : {v}" for k, v in rows)


def noise_shift(p: ModelParams, lambda1: float) -> float:
    """Half-width ``M^2 lambda_1 / (32 delta)`` of the gap around ``1/lambda_1``."""
    return p.cap**2 * lambda1 / (32.0 * p.delta)


def thresholds(p: ModelParams, s: SpectralData) -> tuple[float, float, float]:
    """``(tau_c1, tau_cs, tau_ps)``."""
    lam = s.lambda1
    if lam <= 0:
        raise UndefinedThresholdError("spectral radius is zero (graph has no edges); thresholds undefined")
    tc1 = 1.0 / lam
    shift = noise_shift(p, lam)
    return tc1, tc1 - shift, tc1 + shift


def classify(p: ModelParams, s: SpectralData) -> RegimeReport:
    tc1, tcs, tps = thresholds(p, s)
    tau = p.tau
    if tau < tcs - TIE_TOL:
        label = EXTINCTION
    elif tau > tps + TIE_TOL:
        label = PERMANENCE
    else:
        label = GAP
    margin = min(abs(tau - tcs), abs(tau - tps))
    return RegimeReport(
        tau=tau,
        tau_c1=tc1,
        tau_cs=tcs,
        tau_ps=tps,
        drift_C=lyapunov_drift_constant(p, s),
        label=label,
        margin=margin,
    )
