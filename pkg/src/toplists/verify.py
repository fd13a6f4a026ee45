"""Brute-force oracles for the behaviour of padded scores at desk scale.

Distributions and grid top lists are held as integer numerators over a
common denominator N, so that questions such as "is this list true for
this distribution" are answered exactly.  Floating point enters only when
scores are evaluated.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .core import (
    NORM_TOL,
    VALID_TOL,
    Categorical,
    ClassUniverse,
    TopList,
    calibrated_list,
    full_list,
    is_valid,
    mode,
    pad,
    point_mass,
    top_k_functional,
)
from .scoring import (
    PenaltyConfig,
    ScoringRule,
    brier_rule,
    expectation,
    log_rule,
    expected_score,
    score_vector,
)

EXPECTATION_TOL = 1e-10
DEFAULT_BUDGET = 20_000_000
RESOLVED_MASS = 1e-12


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed the configured work budget."""


def decreasing_rearrangement(v: Sequence[float]) -> list[float]:
    return sorted(v, reverse=True)


def majorizes(v: Sequence[float], w: Sequence[float], tol: float = VALID_TOL) -> bool:
    """Whether ``v`` majorizes ``w``.

    Both vectors must have the same length and total; the partial sums of
    the decreasing rearrangement of ``v`` must dominate those of ``w``.
    """
    if len(v) != len(w):
        raise ValueError(f"length mismatch: {len(v)} vs {len(w)}")
    if abs(math.fsum(v) - math.fsum(w)) > NORM_TOL:
        raise ValueError("majorization needs vectors with equal totals")
    vs, ws = decreasing_rearrangement(v), decreasing_rearrangement(w)
    for k in range(1, len(v)):
        if math.fsum(vs[:k]) < math.fsum(ws[:k]) - tol:
            return False
    return True


@dataclass(frozen=True)
class SimplexGrid:
    """All distributions on m classes whose probabilities are multiples of 1/N."""

    m: int
    N: int

    def __post_init__(self):
        if self.m < 1 or self.N < 1:
            raise ValueError("grid needs m >= 1 and N >= 1")

    def __len__(self) -> int:
        return math.comb(self.N + self.m - 1, self.m - 1)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        # stars and bars: bar positions split N units into m bins
        n, m = self.N, self.m
        for bars in itertools.combinations(range(n + m - 1), m - 1):
            prev = -1
            counts = []
            for b in bars:
                counts.append(b - prev - 1)
                prev = b
            counts.append(n + m - 2 - prev)
            yield tuple(counts)

    def categorical(self, numerators: Sequence[int], universe: ClassUniverse) -> Categorical:
        return Categorical._trusted(universe, tuple(c / self.N for c in numerators))


def _bounded_tuples(k: int, total: int, exact: bool) -> Iterator[tuple[int, ...]]:
    # nonnegative integer k-tuples with sum <= total (== total when exact)
    if k == 0:
        if not exact or total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _bounded_tuples(k - 1, total - first, exact):
            yield (first,) + rest


def grid_candidates(m: int, k: int, N: int) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Every structurally valid top-k list with confidences on the 1/N grid.

    Yields ``(class_indices, numerators)``; invalid lists are included.
    """
    for idx in itertools.combinations(range(m), k):
        for nums in _bounded_tuples(k, N, exact=(k == m)):
            yield idx, nums


def candidate_count(m: int, k: int, N: int) -> int:
    """Closed-form number of grid top-k lists (valid and invalid)."""
    if k == m:
        return math.comb(N + m - 1, m - 1)
    return math.comb(m, k) * math.comb(N + k, k)


def grid_list_is_valid(m: int, N: int, nums: Sequence[int]) -> bool:
    k = len(nums)
    if k == 0 or k == m:
        return True
    return min(nums) * (m - k) >= N - sum(nums)


def grid_list_is_true(p: Sequence[int], idx: Sequence[int], nums: Sequence[int]) -> bool:
    k = len(idx)
    if any(p[i] != c for i, c in zip(idx, nums)):
        return False
    best = sum(sorted(p, reverse=True)[:k])
    return sum(p[i] for i in idx) == best


def _canonical_true(p: Sequence[int], k: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    ranked = sorted(range(len(p)), key=lambda i: (-p[i], i))
    idx = tuple(sorted(ranked[:k]))
    return idx, tuple(p[i] for i in idx)


@dataclass(frozen=True)
class Finding:
    """A grid distribution and a competing list with its expected-score gap."""

    p: tuple[int, ...]
    classes: tuple[str, ...]
    confidences: tuple[int, ...]
    valid: bool
    gap: float

    def describe(self, N: int) -> str:
        p = ",".join(f"{c}/{N}" for c in self.p)
        conf = ",".join(f"{c}/{N}" for c in self.confidences)
        kind = "valid" if self.valid else "invalid"
        return f"p=({p}) s=({{{','.join(self.classes)}}},({conf})) [{kind}] gap={self.gap:.3e}"


@dataclass(frozen=True)
class ConsistencyReport:
    rule: str
    m: int
    k: int
    N: int
    c_invalid: float
    include_invalid: bool
    strict_expected: bool
    n_distributions: int
    n_candidates: int
    violations: tuple[Finding, ...] = ()
    strictness_failures: tuple[Finding, ...] = ()

    @property
    def consistent(self) -> bool:
        return not self.violations

    @property
    def strictly_consistent(self) -> bool:
        return not self.violations and not self.strictness_failures

    @property
    def passed(self) -> bool:
        """No violations, and no strictness failures where strictness is guaranteed."""
        return self.consistent and (self.strictly_consistent or not self.strict_expected)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(consistent=self.consistent, strictly_consistent=self.strictly_consistent, passed=self.passed)
        return out


def check_consistency(
    rule: ScoringRule,
    m: int,
    k: int,
    N: int,
    cfg: PenaltyConfig = PenaltyConfig(),
    include_invalid: bool = True,
    budget: int = DEFAULT_BUDGET,
    tol: float = EXPECTATION_TOL,
) -> ConsistencyReport:
    """Compare the canonical true top-k list against every grid competitor.

    For each distribution on the 1/N simplex grid and each top-k list with
    confidences on the same grid, the expected penalized score of the
    competitor must not undercut that of the true list by more than
    ``tol``.  A competitor that is not itself true but comes within ``tol``
    of the optimum is recorded as a strictness failure.

    With ``include_invalid=False`` only valid competitors are considered.
    Cost is roughly ``len(grid) * candidate_count(m, k, N)`` expectations;
    :class:`BudgetExceeded` is raised beyond ``budget``.
    """
    if not 0 <= k <= m:
        raise ValueError(f"k must lie in 0..{m}, got {k}")
    grid = SimplexGrid(m, N)
    work = len(grid) * candidate_count(m, k, N)
    if work > budget:
        raise BudgetExceeded(f"{work} expectations exceed the budget of {budget}")
    universe = ClassUniverse.numbered(m)
    labels = universe.labels

    candidates = []
    for idx, nums in grid_candidates(m, k, N):
        valid = grid_list_is_valid(m, N, nums)
        if not valid and not include_invalid:
            continue
        t = TopList(universe, [labels[i] for i in idx], [c / N for c in nums])
        candidates.append((idx, nums, valid, score_vector(rule, t, cfg)))
    scores_of = {(idx, nums): vec for idx, nums, _, vec in candidates}

    violations = []
    failures = []
    for p in grid:
        probs = tuple(c / N for c in p)
        true_key = _canonical_true(p, k)
        true_vec = scores_of.get(true_key)
        if true_vec is None:
            t = TopList(universe, [labels[i] for i in true_key[0]], [c / N for c in true_key[1]])
            true_vec = score_vector(rule, t, cfg)
        best = expectation(probs, true_vec)
        for idx, nums, valid, vec in candidates:
            gap = expectation(probs, vec) - best
            if gap < -tol:
                violations.append(Finding(p, tuple(labels[i] for i in idx), nums, valid, gap))
            elif gap <= tol and not grid_list_is_true(p, idx, nums):
                failures.append(Finding(p, tuple(labels[i] for i in idx), nums, valid, gap))

    strict_expected = rule.strictly_proper and (cfg.c_invalid > 0 or not include_invalid)
    return ConsistencyReport(
        rule=rule.name,
        m=m,
        k=k,
        N=N,
        c_invalid=cfg.c_invalid,
        include_invalid=include_invalid,
        strict_expected=strict_expected,
        n_distributions=len(grid),
        n_candidates=len(candidates),
        violations=tuple(violations),
        strictness_failures=tuple(failures),
    )


def check_true_list_majorization(p: Categorical, k: int) -> bool:
    """Padding a true top-k list majorizes padding any valid calibrated top-k list.

    Invalid calibrated lists are skipped: their padding can lift unlisted
    classes above listed ones, and then it may majorize the true padding.
    """
    best = pad(top_k_functional(p, k)).probs
    labels = p.universe.labels
    for classes in itertools.combinations(labels, k):
        s = calibrated_list(p, classes)
        if is_valid(s) and not majorizes(best, pad(s).probs):
            return False
    return True


def true_list_chain(rule: ScoringRule, p: Categorical) -> list[float]:
    """Expected scores of the canonical true top-k lists for k = 0, ..., m."""
    cfg = PenaltyConfig(0.0)
    return [expected_score(rule, top_k_functional(p, k), p, cfg) for k in range(p.universe.m + 1)]


def check_comparability(rule: ScoringRule, p: Categorical, tol: float = 1e-12) -> bool:
    """Expected score of the true top-k list never increases with k."""
    chain = true_list_chain(rule, p)
    return all(nxt <= cur + tol for cur, nxt in zip(chain, chain[1:]))


def relative_gap(rule: ScoringRule, t: TopList, q: Categorical) -> float:
    """Relative excess of the expected score of ``t`` over the optimum under ``q``."""
    optimum = rule.entropy(q)
    return (expected_score(rule, t, q, PenaltyConfig(0.0)) - optimum) / optimum


def _require_alpha(t: TopList) -> float:
    alpha = t.alpha
    if t.k == 0 or t.k == t.m or not 0.0 < alpha < min(t.confidences):
        raise ValueError(
            f"need 0 < unlisted mass < least confidence, got alpha={alpha!r} for {t}"
        )
    return alpha


def worst_case_distribution(t: TopList) -> Categorical:
    """Distribution in which ``t`` is true and all unlisted mass sits on one class."""
    _require_alpha(t)
    u = t.universe
    probs = [0.0] * u.m
    for cls, conf in zip(t.classes, t.confidences):
        probs[u.index(cls)] = conf
    first_unlisted = next(i for i, lab in enumerate(u.labels) if lab not in t.classes)
    probs[first_unlisted] = t.alpha
    return Categorical(u, probs)


def sample_true_distributions(t: TopList, trials: int, seed: int) -> list[Categorical]:
    """Random distributions in which ``t`` is a true top list.

    The unlisted mass is split by a flat Dirichlet draw; draws that would
    give an unlisted class more than the least confidence are rejected.
    """
    alpha = _require_alpha(t)
    rng = np.random.default_rng(seed)
    u = t.universe
    unlisted = [i for i, lab in enumerate(u.labels) if lab not in t.classes]
    floor = min(t.confidences)
    base = [0.0] * u.m
    for cls, conf in zip(t.classes, t.confidences):
        base[u.index(cls)] = conf
    out = []
    while len(out) < trials:
        share = rng.dirichlet(np.ones(len(unlisted))) * alpha
        if share.max() > floor:
            continue
        probs = list(base)
        for i, s in zip(unlisted, share):
            probs[i] = float(s)
        out.append(Categorical(u, probs))
    return out


def check_brier_alpha_bound(t: TopList, trials: int = 100, seed: int = 0) -> bool:
    """Relative Brier gap of ``t`` stays below its unlisted mass alpha.

    Checked on the worst-case distribution and on ``trials`` sampled
    distributions relative to which ``t`` is true.
    """
    alpha = _require_alpha(t)
    rule = brier_rule()
    qs = [worst_case_distribution(t)] + sample_true_distributions(t, trials, seed)
    return all(relative_gap(rule, t, q) < alpha for q in qs)


def t_transform(v: Sequence[float], i: int, j: int, lam: float) -> list[float]:
    """Move entries ``i`` and ``j`` toward each other; the result is majorized by ``v``."""
    out = list(v)
    out[i] = lam * v[i] + (1 - lam) * v[j]
    out[j] = lam * v[j] + (1 - lam) * v[i]
    return out


def check_entropy_schur_concavity(rule: ScoringRule, m: int, trials: int = 1000, seed: int = 0) -> bool:
    """Entropy does not increase along majorization.

    Pairs p > q come from applying one to three T-transforms (weights in
    [0.05, 0.95], entries at least 0.01 apart) to a random p.  Strictly
    proper rules must show a strict decrease whenever the rearrangements
    differ by more than 1e-9.
    """
    if m < 2:
        raise ValueError("need at least two classes")
    rng = np.random.default_rng(seed)
    universe = ClassUniverse.numbered(m)
    done = 0
    while done < trials:
        p = rng.dirichlet(np.ones(m)).tolist()
        q = list(p)
        for _ in range(int(rng.integers(1, 4))):
            i, j = (int(x) for x in rng.choice(m, size=2, replace=False))
            if abs(q[i] - q[j]) < 0.01:
                continue
            q = t_transform(q, i, j, float(rng.uniform(0.05, 0.95)))
        if not majorizes(p, q):
            raise AssertionError("T-transform produced a non-majorized vector")
        gp = rule.entropy(Categorical(universe, p))
        gq = rule.entropy(Categorical(universe, q))
        if gp > gq + 1e-12:
            return False
        spread = max(abs(a - b) for a, b in zip(decreasing_rearrangement(p), decreasing_rearrangement(q)))
        if rule.strictly_proper and spread > 1e-9 and not gp < gq:
            return False
        done += 1
    return True


def check_symmetry(rule: ScoringRule, m: int, trials: int = 1000, seed: int = 0) -> bool:
    """Relabelling classes leaves every score unchanged, exactly."""
    rng = np.random.default_rng(seed)
    universe = ClassUniverse.numbered(m)
    labels = universe.labels
    for _ in range(trials):
        p = rng.dirichlet(np.ones(m) * rng.uniform(0.2, 3.0)).tolist()
        perm = rng.permutation(m).tolist()
        pp = Categorical(universe, p)
        moved = [0.0] * m
        for i, target in enumerate(perm):
            moved[target] = pp.probs[i]
        qq = Categorical._trusted(universe, tuple(moved))
        y = int(rng.integers(m))
        if rule.score(pp, labels[y]) != rule.score(qq, labels[perm[y]]):
            return False
    return True


def check_propriety(rule: ScoringRule, m: int, N: int, tol: float = EXPECTATION_TOL) -> bool:
    """On the 1/N grid, reporting the true distribution minimizes the expected score.

    For strictly proper rules every other report must be worse by more than
    ``tol``.
    """
    grid = SimplexGrid(m, N)
    universe = ClassUniverse.numbered(m)
    points = [grid.categorical(c, universe) for c in grid]
    vectors = [[rule.score(q, y) for y in universe.labels] for q in points]
    for i, p in enumerate(points):
        own = expectation(p.probs, vectors[i])
        for j, vec in enumerate(vectors):
            if i == j:
                continue
            gap = expectation(p.probs, vec) - own
            if gap < -tol or (rule.strictly_proper and gap <= tol):
                return False
    return True


@dataclass
class OracleSummary:
    """Outcome of one named oracle run, for reporting."""

    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    lines: list = field(default_factory=list)


def random_categorical(universe: ClassUniverse, rng: np.random.Generator) -> Categorical:
    """Random distribution mixing smooth, peaked, tied and sparse shapes.

    Entries below ``RESOLVED_MASS`` are set to exactly zero.
    """
    m = universe.m
    shape = int(rng.integers(4))
    if shape == 0:
        probs = rng.dirichlet(np.ones(m))
    elif shape == 1:
        probs = rng.dirichlet(np.full(m, 0.2))
    elif shape == 2:
        # coarse grid values produce exact ties
        counts = rng.multinomial(int(rng.integers(1, 2 * m + 1)), np.ones(m) / m)
        probs = counts / counts.sum()
    else:
        probs = rng.dirichlet(np.ones(m))
        probs[rng.random(m) < 0.3] = 0.0
        if probs.sum() == 0.0:
            probs[int(rng.integers(m))] = 1.0
        probs = probs / probs.sum()
    # masses below the rounding error of the total cannot be told apart from zero
    probs = np.where(probs < RESOLVED_MASS, 0.0, probs)
    if probs.sum() == 0.0:
        probs[int(np.argmax(probs))] = 1.0
    return Categorical(universe, (probs / probs.sum()).tolist())


def random_alpha_list(m: int, rng: np.random.Generator) -> TopList:
    """Random top list with 0 < unlisted mass < least confidence (hence valid)."""
    if m < 2:
        raise ValueError("need at least two classes")
    universe = ClassUniverse.numbered(m)
    k = int(rng.integers(1, m))
    alpha = 0.0
    while alpha == 0.0:
        alpha = float(rng.uniform(0.0, 1.0 / (k + 1)))
    spare = 1.0 - alpha - k * alpha
    confs = alpha + spare * rng.dirichlet(np.ones(k))
    while confs.min() <= alpha:
        confs = alpha + spare * rng.dirichlet(np.ones(k))
    classes = rng.choice(m, size=k, replace=False)
    t = TopList(universe, [universe.labels[i] for i in classes], confs.tolist())
    _require_alpha(t)
    return t


P_HIGH = (0.99, 0.01, 0.0, 0.0, 0.0)
P_MODERATE = (0.5, 0.4, 0.05, 0.03, 0.02)
P_MODERATE_DISPLAYED = (0.5, 0.44, 0.03, 0.02, 0.01)
P_LOW = (0.25, 0.22, 0.2, 0.18, 0.15)
TABLE1_COLUMNS = ("Mode(p)", "T_1(p)", "T_2(p)", "p")


def table1(p_moderate: Sequence[float] = P_MODERATE) -> list[dict]:
    """Expected scores of the mode, true top-1, true top-2 and full predictions.

    One row per (distribution, rule) on five classes; each cell holds the
    expected score and its relative excess over the optimum (None for the
    optimum itself and for infinite scores).
    """
    universe = ClassUniverse.numbered(5)
    dists = [("p(h)", P_HIGH), ("p(m)", tuple(p_moderate)), ("p(l)", P_LOW)]
    rows = []
    for rule in (brier_rule(), log_rule()):
        for name, probs in dists:
            p = Categorical(universe, probs)
            (mode_class,) = sorted(mode(p), key=universe.index)[:1]
            preds = [
                point_mass(mode_class, universe),
                top_k_functional(p, 1),
                top_k_functional(p, 2),
                full_list(p),
            ]
            optimum = rule.entropy(p)
            cells = []
            for column, t in zip(TABLE1_COLUMNS, preds):
                value = expected_score(rule, t, p)
                gap = None
                if column != "p" and math.isfinite(value):
                    gap = (value - optimum) / optimum
                cells.append({"column": column, "score": value, "gap": gap})
            rows.append({"p": name, "probs": list(p.probs), "rule": rule.name, "optimum": optimum, "cells": cells})
    return rows
