"""AMP-based joint activity detection and channel estimation with
temporally correlated device activity and two-sided side information."""

__version__ = "0.1.0"

from .amp import AmpRunState, SideInfo, WindowSideInfo, run_amp
from .backend import BACKEND
from .denoiser import (
    DenoiserParams,
    denoise_dsi,
    denoise_generalized,
    denoiser_jacobian,
    generalized_jacobian,
    inverse_llr,
    phi_dsi,
)
from .detection import Metrics, calibrate_equal_rates, compute_metrics, detect, llr_scores
from .experiment import SweepSpec, emit_csv, emit_plotdata, run_point, run_sweep
from .oracle import PatternPosterior, exact_pattern_posterior, exact_posterior_mean
from .pipeline import (
    DSI,
    NOSI,
    PERFECT_SI,
    SSI,
    SiMode,
    extract_si,
    generalized_dsi,
    parse_mode,
    perfect_si,
    process_frames,
)
from .state_evolution import se_trajectory
from .system import (
    MarkovActivityModel,
    ScenarioRealization,
    SystemConfig,
    generate_scenario,
    load_config,
    pattern_probabilities,
    pattern_probability,
    stationary_probability,
)

__all__ = [
    "AmpRunState", "SideInfo", "WindowSideInfo", "run_amp", "BACKEND",
    "DenoiserParams", "denoise_dsi", "denoise_generalized", "denoiser_jacobian",
    "generalized_jacobian", "inverse_llr", "phi_dsi", "Metrics", "calibrate_equal_rates", "compute_metrics",
    "detect", "llr_scores", "SweepSpec", "emit_csv", "emit_plotdata", "run_point",
    "run_sweep", "PatternPosterior", "exact_pattern_posterior", "exact_posterior_mean",
    "DSI", "NOSI", "PERFECT_SI", "SSI", "SiMode", "extract_si", "generalized_dsi",
    "parse_mode", "perfect_si", "process_frames", "se_trajectory",
    "MarkovActivityModel", "ScenarioRealization", "SystemConfig", "generate_scenario",
    "load_config", "pattern_probabilities", "pattern_probability", "stationary_probability",
]
