"""Closed-ward multi-agent experiment harness.

The compiled extension carries the simulation engine, the behavioral
measures, and the statistical battery; this package re-exports its surface.
"""

from wardlab._core import (  # noqa: F401
    BackendError,
    ConfigError,
    DataError,
    binomial_sign_test,
    bootstrap_ci,
    cohen_kappa,
    cohens_d,
    extract_metrics,
    hedges_g,
    holm_adjust,
    kruskal_wallis,
    lmm_random_intercept,
    match_keywords,
    permutation_test,
    simulate_run,
    wilcoxon_signed_rank,
    zscore,
)

__all__ = [
    "BackendError",
    "ConfigError",
    "DataError",
    "binomial_sign_test",
    "bootstrap_ci",
    "cohen_kappa",
    "cohens_d",
    "extract_metrics",
    "hedges_g",
    "holm_adjust",
    "kruskal_wallis",
    "lmm_random_intercept",
    "match_keywords",
    "permutation_test",
    "simulate_run",
    "wilcoxon_signed_rank",
    "zscore",
]
