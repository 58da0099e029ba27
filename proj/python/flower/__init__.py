"""Bayesian density regression for multivariate responses with categorical covariates.

Responses live on a common bounded support [A, B] (default [0, 10]); arrays
are unit-major, so ``x`` has shape (n, d) and ``c`` has shape (n, p) with
0-based covariate codes.
"""

from ._flower import (
    ConfigError,
    DataError,
    DomainError,
    Hyperparameters,
    IoError,
    Posterior,
    TrueModel,
    adjusted_rand_index,
    cli,
    fit,
    score,
    simulate_scenario1,
    simulate_scenario2,
    std_normal_quantile,
    tn_cdf,
    tn_pdf,
    tn_quantile,
    truth_as_posterior,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DomainError",
    "Hyperparameters",
    "IoError",
    "Posterior",
    "TrueModel",
    "adjusted_rand_index",
    "cli",
    "fit",
    "score",
    "simulate_scenario1",
    "simulate_scenario2",
    "std_normal_quantile",
    "tn_cdf",
    "tn_pdf",
    "tn_quantile",
    "truth_as_posterior",
]
