"""Fractional-order dynamical systems: simulation, identification, certificates."""

__version__ = "0.1.0"

from .certify import (
    BoundCertificate,
    BoundConstants,
    CampaignResult,
    CampaignRow,
    GramianSeries,
    evaluate_bound,
    evaluate_bound_with_inputs,
    gramian,
    gramian_input,
    gramian_series,
    monte_carlo_campaign,
    select_k,
    spectral_radius,
)
from .core import (
    AugmentedSystem,
    FracSystem,
    GlWeights,
    augment,
    build_aj,
    gl_weight_table,
    gl_weights,
)
from .errors import ConfigError, DataError, DegenerateError, DomainError, FodsidError
from .forecast import (
    WindowedForecast,
    load_series,
    persistence_rmse,
    window_size_sweep,
    windowed_fit_predict,
)
from .ident import (
    OlsEstimate,
    build_regressors,
    ols_fit,
    ols_fit_with_inputs,
    operator_norm,
    operator_norm_error,
    submatrix_error_report,
)
from .sim import (
    Trajectory,
    TrajectoryMeta,
    gaussian_inputs,
    process_noise,
    simulate_augmented,
    simulate_exact,
    truncation_error_sweep,
)

__all__ = [
    "__version__",
    "AugmentedSystem", "FracSystem", "GlWeights", "augment", "build_aj",
    "gl_weight_table", "gl_weights",
    "Trajectory", "TrajectoryMeta", "gaussian_inputs", "process_noise",
    "simulate_augmented", "simulate_exact", "truncation_error_sweep",
    "OlsEstimate", "build_regressors", "ols_fit", "ols_fit_with_inputs",
    "operator_norm", "operator_norm_error", "submatrix_error_report",
    "BoundCertificate", "BoundConstants", "CampaignResult", "CampaignRow",
    "GramianSeries", "evaluate_bound", "evaluate_bound_with_inputs",
    "gramian", "gramian_input", "gramian_series", "monte_carlo_campaign",
    "select_k", "spectral_radius",
    "WindowedForecast", "load_series", "persistence_rmse",
    "window_size_sweep", "windowed_fit_predict",
    "ConfigError", "DataError", "DegenerateError", "DomainError", "FodsidError",
]
