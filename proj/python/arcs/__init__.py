"""Python bindings for the arcs trial simulator."""

from ._arcs import (
    ArcsError,
    coin_probability,
    lasso_fit,
    lasso_lambda_max,
    mahalanobis_imb,
    methods,
    phi_cov,
    pinv,
    rr_threshold,
    run_trial,
    simulate,
)

__all__ = [
    "ArcsError",
    "coin_probability",
    "lasso_fit",
    "lasso_lambda_max",
    "mahalanobis_imb",
    "methods",
    "phi_cov",
    "pinv",
    "rr_threshold",
    "run_trial",
    "simulate",
]
