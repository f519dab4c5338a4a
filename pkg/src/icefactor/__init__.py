"""Optimal combination of noisy monthly indicators via a single-factor
linear-Gaussian state-space model, with EM estimation, Kalman smoothing
extraction, and a reproduction pipeline for Arctic sea-ice extent data."""

from .errors import IceFactorError, InputError, NumericalError
from .estimation import (EMConfig, FitResult, SEResult, e_step, fit_em,
                         m_step, standard_errors)
from .extraction import (ExtractedSeries, NormComparison,
                         compare_normalizations, extract_factor)
from .ingestion import (DEFAULT_SOURCES, PanelReport, SourceSpec, build_panel,
                        parse_source, read_panel_csv, write_panel_csv)
from .kalman import (FilterOutput, SmootherOutput, kalman_filter,
                     kalman_smoother, log_likelihood)
from .model import (CANONICAL_NAMES, DesignMatrix, IndicatorPanel,
                    ModelParams, StateInit, anchor_index, build_design_matrix,
                    transition_mean, unconditional_init)
from .simulation import (McReport, SimConfig, monte_carlo_recovery,
                         reference_params, simulate)

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_NAMES", "DEFAULT_SOURCES", "DesignMatrix", "EMConfig",
    "ExtractedSeries", "FilterOutput", "FitResult", "IceFactorError",
    "IndicatorPanel", "InputError", "McReport", "ModelParams",
    "NormComparison", "NumericalError", "PanelReport", "SEResult",
    "SimConfig", "SmootherOutput", "SourceSpec", "StateInit", "anchor_index",
    "build_design_matrix", "build_panel", "compare_normalizations", "e_step",
    "extract_factor", "fit_em", "kalman_filter", "kalman_smoother",
    "log_likelihood", "m_step", "monte_carlo_recovery", "parse_source",
    "read_panel_csv", "reference_params", "simulate", "standard_errors",
    "transition_mean", "unconditional_init", "write_panel_csv",
]
