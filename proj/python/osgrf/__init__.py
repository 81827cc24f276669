"""Operator-scaling Gaussian random fields from long-range ancestor graphs."""

from ._core import (
    C_H,
    ConfigError,
    DomainError,
    NumericalError,
    ResourceError,
    SpectralModel,
    __version__,
    classify,
    closed_form_cov,
    cov_W,
    exact_sum_sq,
    qtable,
    sheet_case,
    sigma_x2_from_sum_sq,
    simulate_window,
    synthesize_W,
    verify_identities,
)

__all__ = [
    "C_H",
    "ConfigError",
    "DomainError",
    "NumericalError",
    "ResourceError",
    "SpectralModel",
    "__version__",
    "classify",
    "closed_form_cov",
    "cov_W",
    "exact_sum_sq",
    "qtable",
    "sheet_case",
    "sigma_x2_from_sum_sq",
    "simulate_window",
    "synthesize_W",
    "verify_identities",
]
