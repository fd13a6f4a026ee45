"""Symmetric proper scoring rules and their extensions to top lists.

Scores are negatively oriented and take values in the extended reals: the
logarithmic score is +inf when the observed class was given probability 0.
In expectations a class of probability 0 contributes nothing, whatever its
score (0 * inf = 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .core import (
    Categorical,
    ClassUniverse,
    EvalCase,
    TopList,
    UniverseMismatchError,
    _check_same_universe,
    is_valid,
    largest_valid_sublist,
    pad,
)

INF = math.inf
DEFAULT_PENALTY = 0.001


class InvalidTopListError(ValueError):
    """A padded score was requested for an invalid top list."""


def extended_fsum(values: Iterable[float]) -> float:
    """Correctly rounded sum over the extended reals.

    Any +inf summand makes the sum +inf; mixing +inf and -inf is undefined
    and raises.
    """
    finite = []
    pos = neg = False
    for v in values:
        if v == INF:
            pos = True
        elif v == -INF:
            neg = True
        else:
            finite.append(v)
    if pos and neg:
        raise ValueError("sum of +inf and -inf is undefined")
    if pos:
        return INF
    if neg:
        return -INF
    return math.fsum(finite)


def expectation(probs: Sequence[float], scores: Sequence[float]) -> float:
    """Sum of ``prob * score`` with zero-probability terms dropped."""
    return extended_fsum(q * s for q, s in zip(probs, scores) if q > 0.0)


@dataclass(frozen=True)
class ScoringRule:
    """A symmetric proper scoring rule S(p, y) with entropy G(p) = E_p[S(p, Y)].

    ``padded`` optionally supplies a closed form for S(pad(t), y); when it
    is absent the score is computed by padding first.
    """

    name: str
    score: Callable[[Categorical, str], float]
    entropy: Callable[[Categorical], float]
    strictly_proper: bool = True
    padded: Optional[Callable[[TopList, str], float]] = None

    def __call__(self, p: Categorical, y: str) -> float:
        return self.score(p, y)


@dataclass(frozen=True)
class PenaltyConfig:
    c_invalid: float = DEFAULT_PENALTY

    def __post_init__(self):
        if not self.c_invalid >= 0:
            raise ValueError(f"c_invalid must be nonnegative, got {self.c_invalid!r}")


def _brier_score(p: Categorical, y: str) -> float:
    return 1.0 - 2.0 * p[y] + math.fsum(q * q for q in p.probs)


def _brier_entropy(p: Categorical) -> float:
    return 1.0 - math.fsum(q * q for q in p.probs)


def padded_brier_score(t: TopList, y: str) -> float:
    """Closed form of the Brier score of the padded distribution of ``t``."""
    conf = t.confidence(y)
    listed = math.fsum(t.confidences)
    squares = math.fsum(c * c for c in t.confidences)
    if t.k == t.m:
        return 1.0 + squares - 2.0 * conf
    rest = 1.0 - listed
    n_unlisted = t.m - t.k
    share = conf if conf is not None else rest / n_unlisted
    return 1.0 + squares + rest * rest / n_unlisted - 2.0 * share


def _log_score(p: Categorical, y: str) -> float:
    q = p[y]
    return -math.log(q) if q > 0.0 else INF


def _log_entropy(p: Categorical) -> float:
    return -math.fsum(q * math.log(q) for q in p.probs if q > 0.0)


def padded_log_score(t: TopList, y: str) -> float:
    """Closed form of the logarithmic score of the padded distribution of ``t``."""
    conf = t.confidence(y)
    if conf is not None:
        return -math.log(conf) if conf > 0.0 else INF
    rest = 1.0 - math.fsum(t.confidences)
    if rest <= 0.0:
        return INF
    return math.log(t.m - t.k) - math.log(rest)


def brier_rule() -> ScoringRule:
    """Brier (quadratic) score, S(p, y) = 1 - 2 p_y + sum_z p_z^2."""
    return ScoringRule("brier", _brier_score, _brier_entropy, True, padded_brier_score)


def log_rule() -> ScoringRule:
    """Logarithmic score, S(p, y) = -ln p_y, with entropy the Shannon entropy in nats."""
    return ScoringRule("log", _log_score, _log_entropy, True, padded_log_score)


RULES = {"brier": brier_rule, "log": log_rule}


def get_rule(name: str) -> ScoringRule:
    try:
        return RULES[name]()
    except KeyError:
        raise ValueError(f"unknown scoring rule {name!r}; choose from {sorted(RULES)}") from None


def padded_score(rule: ScoringRule, t: TopList, y: str) -> float:
    """Score of the valid top list ``t`` when ``y`` is observed.

    Raises
    ------
    InvalidTopListError
        If ``t`` is not valid; use :func:`penalized_score` for such lists.
    UnknownClassError
        If ``y`` is not in the universe of ``t``.
    """
    t.universe.index(y)
    if not is_valid(t):
        raise InvalidTopListError(f"top list {t} is invalid")
    if rule.padded is not None:
        return rule.padded(t, y)
    return rule.score(pad(t), y)


def penalized_score(
    rule: ScoringRule, t: TopList, y: str, cfg: PenaltyConfig = PenaltyConfig()
) -> float:
    """Padded score, extended to invalid lists.

    An invalid list is scored as its largest valid sublist plus
    ``cfg.c_invalid``.
    """
    if is_valid(t):
        return padded_score(rule, t, y)
    return padded_score(rule, largest_valid_sublist(t), y) + cfg.c_invalid


def score_vector(rule: ScoringRule, t: TopList, cfg: PenaltyConfig = PenaltyConfig()) -> list[float]:
    """Penalized score of ``t`` for every possible observation, in universe order."""
    return [penalized_score(rule, t, y, cfg) for y in t.universe.labels]


def expected_score(
    rule: ScoringRule, t: TopList, p: Categorical, cfg: PenaltyConfig = PenaltyConfig()
) -> float:
    """Exact expected penalized score of ``t`` under ``Y ~ p``."""
    _check_same_universe(t.universe, p.universe)
    return expectation(p.probs, score_vector(rule, t, cfg))


def case_score(rule: ScoringRule, case: EvalCase, cfg: PenaltyConfig = PenaltyConfig()) -> float:
    return penalized_score(rule, case.prediction, case.observation, cfg)


def mean_score(
    rule: ScoringRule, cases: Sequence[EvalCase], cfg: PenaltyConfig = PenaltyConfig()
) -> float:
    """Mean penalized score over ``cases``; +inf if any case scores +inf."""
    if not cases:
        raise ValueError("cannot average over zero cases")
    universe: ClassUniverse = cases[0].universe
    for case in cases:
        if case.universe != universe:
            raise UniverseMismatchError("evaluation cases mix class universes")
    total = extended_fsum(case_score(rule, case, cfg) for case in cases)
    return total / len(cases)
