"""Consistent evaluation of probabilistic top-k list predictions."""
from .core import (
    Categorical,
    ClassUniverse,
    EvalCase,
    TopList,
    UnknownClassError,
    UniverseMismatchError,
    calibrated_list,
    full_list,
    is_calibrated,
    is_valid,
    largest_valid_sublist,
    mode,
    pad,
    point_mass,
    proxy_probability,
    top_k_functional,
)
from .scoring import (
    InvalidTopListError,
    PenaltyConfig,
    ScoringRule,
    brier_rule,
    expected_score,
    get_rule,
    log_rule,
    mean_score,
    padded_score,
    penalized_score,
)

__version__ = "0.1.0"
