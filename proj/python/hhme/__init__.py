"""Finite-population mean estimation under two-phase non-response
subsampling and additive measurement error.

The heavy lifting lives in the compiled extension ``hhme._core``: closed-form
first-order MSE formulas for the usual, ratio, regression and combined-class
estimators, an exact-moment population generator, and a deterministic
parallel Monte Carlo engine that verifies the formulas empirically.
"""

from hhme._core import (
    Population,
    ValidationError,
    b_opt,
    bias_tr,
    derive_moments,
    efficiency_report,
    estimate_parameters_csv,
    generate_population,
    grid_search_m2,
    load_params,
    m2_opt,
    mse_t1,
    mse_tlr,
    mse_tlr_min,
    mse_tp,
    mse_tp_min,
    mse_tr,
    params_from_toml,
    params_to_toml,
    reference_parameters,
    reproduce_report,
    save_params,
    simulate,
    simulate_json,
    validate_params,
    variance_hh,
)

__all__ = [
    "Population",
    "ValidationError",
    "b_opt",
    "bias_tr",
    "derive_moments",
    "efficiency_report",
    "estimate_parameters_csv",
    "generate_population",
    "grid_search_m2",
    "load_params",
    "m2_opt",
    "mse_t1",
    "mse_tlr",
    "mse_tlr_min",
    "mse_tp",
    "mse_tp_min",
    "mse_tr",
    "params_from_toml",
    "params_to_toml",
    "reference_parameters",
    "reproduce_report",
    "save_params",
    "simulate",
    "simulate_json",
    "validate_params",
    "variance_hh",
]

__version__ = "1.0.0"
