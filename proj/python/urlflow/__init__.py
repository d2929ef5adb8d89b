"""Discrete-time multivariate Hawkes models of URL diffusion across communities."""

from ._core import (
    ConfigError,
    DataError,
    FitError,
    ModelError,
    Priors,
    UrlflowError,
    __version__,
    compute_rates,
    default_lag_edges,
    fit,
    influence_percentage,
    kolmogorov_survival,
    ks_two_sample,
    log_likelihood,
    significance_stars,
    simulate,
    spectral_radius,
    url_seed,
)

__all__ = [
    "ConfigError",
    "DataError",
    "FitError",
    "ModelError",
    "Priors",
    "UrlflowError",
    "__version__",
    "compute_rates",
    "default_lag_edges",
    "fit",
    "influence_percentage",
    "kolmogorov_survival",
    "ks_two_sample",
    "log_likelihood",
    "significance_stars",
    "simulate",
    "spectral_radius",
    "url_seed",
]
