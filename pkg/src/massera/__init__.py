"""Numerical diagnostics for asymptotically periodic scalar equations.

Solutions of ``x' = f(t, x)`` or ``x(t+1) = f(t, x)`` with ``f = P + R``,
``P`` periodic in ``t`` and ``R -> 0``, are classified as asymptotically
periodic, S-asymptotically periodic only, or unbounded, with the period map
of the limiting equation, chain recurrence on samples and the compact-open
distance between functions as supporting tools.
"""

__version__ = "0.1.0"

from .bebutov import SampledFunction, bebutov_distance, check_lemma_l1, shift_function, tail_shift_classification
from .chain import build_chain_graph, chain_recurrent_set, is_internally_chain_transitive
from .dynamics import (
    ConfigurationError,
    IntegratorConfig,
    ScalarField,
    advance,
    integrate,
    iterate_map,
    sample,
    verify_cocycle,
)
from .expr import EvalError, ParseError, compile_expr, eval_expr, format_expr, parse
from .period import (
    AnalysisConfig,
    Stability,
    Verdict,
    build_period_map,
    classify_asymptotic,
    classify_s_asymptotic,
    classify_stability,
    estimate_delta,
    find_fixed_points,
    full_analysis,
    residual_series,
)
from .presets import get_preset, preset_names

__all__ = [
    "AnalysisConfig",
    "ConfigurationError",
    "EvalError",
    "IntegratorConfig",
    "ParseError",
    "SampledFunction",
    "ScalarField",
    "Stability",
    "Verdict",
    "advance",
    "bebutov_distance",
    "build_chain_graph",
    "build_period_map",
    "chain_recurrent_set",
    "check_lemma_l1",
    "classify_asymptotic",
    "classify_s_asymptotic",
    "classify_stability",
    "compile_expr",
    "estimate_delta",
    "eval_expr",
    "find_fixed_points",
    "format_expr",
    "full_analysis",
    "get_preset",
    "integrate",
    "is_internally_chain_transitive",
    "iterate_map",
    "parse",
    "preset_names",
    "residual_series",
    "sample",
    "shift_function",
    "tail_shift_classification",
    "verify_cocycle",
]
