"""SIS epidemics on contact networks with stochastic infection rates."""

from .config import RunConfig, golden_config, load_config, parse_config
from .ensemble import EnsembleStats, extinction_time, permanence_estimate, run_ensemble, simulate_paths
from .errors import SisError
from .exact import exact_marginals_mc, exact_marginals_ode, gillespie_path, nimfa_bound_report
from .graph import (
    ContactGraph,
    SpectralData,
    build_complete,
    build_path,
    build_random,
    build_ring,
    build_star,
    load_edge_list,
    spectral_radius,
)
from .model import ModelParams, NoiseSpec
from .nimfa import Trajectory, endemic_equilibrium, integrate_nimfa, nimfa_drift, nimfa_threshold
from .regime import RegimeReport, classify
from .sde import (
    SdePath,
    diffusion,
    em_step,
    empirical_generator_check,
    lyapunov_drift_constant,
    simulate_batch,
    simulate_sde,
    simulate_with_increments,
)

__version__ = "0.1.0"
