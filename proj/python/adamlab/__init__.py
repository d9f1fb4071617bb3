"""Numerical laboratory for continuous-time models of bias-corrected adaptive optimizers.

The heavy lifting lives in the C++ core; this package re-exports the bound operations:
objectives and condition checks, the discrete recursion, SDE ensembles, Lyapunov drift
certificates, degeneracy analysis and Lie brackets, control-skeleton planning, and
sliced-Wasserstein diagnostics.
"""

from ._adamlab import (
    ControlError,
    DivergenceError,
    HyperParams,
    LyapunovParams,
    Objective,
    ParamError,
    SearchError,
    State,
    bias_coefficient,
    bias_factors,
    check_conditions,
    classify,
    closed_form_LV,
    control_batch,
    drift_check,
    eval_V,
    evaluate,
    find_regular_point,
    lie_bracket,
    make_objective,
    matrix_A,
    plan_control,
    run_discrete,
    select_lyapunov_params,
    simulate_ensemble,
    simulate_terminal,
    sliced_w2,
)

__all__ = [
    "ControlError",
    "DivergenceError",
    "HyperParams",
    "LyapunovParams",
    "Objective",
    "ParamError",
    "SearchError",
    "State",
    "bias_coefficient",
    "bias_factors",
    "check_conditions",
    "classify",
    "closed_form_LV",
    "control_batch",
    "drift_check",
    "eval_V",
    "evaluate",
    "find_regular_point",
    "lie_bracket",
    "make_objective",
    "matrix_A",
    "plan_control",
    "run_discrete",
    "select_lyapunov_params",
    "simulate_ensemble",
    "simulate_terminal",
    "sliced_w2",
]

__version__ = "0.1.0"
