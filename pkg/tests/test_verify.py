import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toplists.core import Categorical, ClassUniverse, TopList, calibrated_list, is_valid, pad, top_k_functional
from toplists.scoring import PenaltyConfig, brier_rule, log_rule
from toplists.verify import (
    P_HIGH,
    P_LOW,
    P_MODERATE,
    BudgetExceeded,
    SimplexGrid,
    candidate_count,
    check_brier_alpha_bound,
    check_comparability,
    check_consistency,
    check_entropy_schur_concavity,
    check_propriety,
    check_symmetry,
    check_true_list_majorization,
    decreasing_rearrangement,
    grid_candidates,
    grid_list_is_true,
    grid_list_is_valid,
    majorizes,
    random_alpha_list,
    random_categorical,
    relative_gap,
    sample_true_distributions,
    t_transform,
    true_list_chain,
    worst_case_distribution,
)

BRIER, LOG = brier_rule(), log_rule()
U4 = ClassUniverse.numbered(4)
U5 = ClassUniverse.numbered(5)


class TestMajorization:
    def test_examples(self):
        assert decreasing_rearrangement([0.1, 0.5, 0.4]) == [0.5, 0.4, 0.1]
        assert majorizes([1, 0, 0], [1 / 3, 1 / 3, 1 / 3])
        assert not majorizes([1 / 3, 1 / 3, 1 / 3], [1, 0, 0])
        assert majorizes([0.2, 0.3, 0.5], [0.5, 0.2, 0.3])

    def test_incomparable_pair(self):
        v, w = [0.6, 0.2, 0.2, 0.0], [0.5, 0.4, 0.05, 0.05]
        assert not majorizes(v, w) and not majorizes(w, v)

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            majorizes([1, 0], [1, 0, 0])
        with pytest.raises(ValueError):
            majorizes([1, 0], [0.5, 0.4])

    def test_example_distribution_calibrated_pairs(self):
        p = Categorical(U4, [0.5, 0.2, 0.2, 0.1])
        best = pad(top_k_functional(p, 2)).probs
        assert best == pytest.approx((0.5, 0.2, 0.15, 0.15), abs=1e-15)
        valid = [c for c in itertools.combinations(U4.labels, 2) if is_valid(calibrated_list(p, c))]
        assert valid == [("1", "2"), ("1", "3")]
        assert all(majorizes(best, pad(calibrated_list(p, c)).probs) for c in valid)
        # invalid calibrated list: its padding is p itself and beats the true padding
        other = pad(calibrated_list(p, ["1", "4"])).probs
        assert other == pytest.approx((0.5, 0.2, 0.2, 0.1), abs=1e-15)
        assert majorizes(other, best) and not majorizes(best, other)
        assert check_true_list_majorization(p, 2)

    @given(st.lists(st.integers(0, 20), min_size=2, max_size=6).filter(any), st.data())
    def test_t_transform_is_majorized(self, weights, data):
        total = sum(weights)
        v = [w / total for w in weights]
        i, j = data.draw(st.lists(st.integers(0, len(v) - 1), min_size=2, max_size=2, unique=True))
        lam = data.draw(st.floats(0, 1))
        w = t_transform(v, i, j, lam)
        assert majorizes(v, w)


class TestGrid:
    @pytest.mark.parametrize("m,N", [(1, 5), (3, 10), (4, 8), (5, 3)])
    def test_size_matches_closed_form(self, m, N):
        points = list(SimplexGrid(m, N))
        assert len(points) == len(SimplexGrid(m, N)) == math.comb(N + m - 1, m - 1)
        assert len(set(points)) == len(points)
        assert all(sum(p) == N and min(p) >= 0 for p in points)

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            SimplexGrid(0, 4)

    @pytest.mark.parametrize("m,N", [(3, 6), (4, 5)])
    def test_candidate_enumeration_is_complete(self, m, N):
        for k in range(m + 1):
            cands = list(grid_candidates(m, k, N))
            assert len(cands) == len(set(cands)) == candidate_count(m, k, N)

    def test_exact_validity_agrees_with_float_check(self):
        m, N = 4, 10
        labels = U4.labels
        for k in range(m + 1):
            for idx, nums in grid_candidates(m, k, N):
                t = TopList(U4, [labels[i] for i in idx], [c / N for c in nums])
                assert grid_list_is_valid(m, N, nums) == is_valid(t)

    def test_truth(self):
        p = (5, 2, 2, 1)
        assert grid_list_is_true(p, (0, 1), (5, 2))
        assert grid_list_is_true(p, (0, 2), (5, 2))
        assert not grid_list_is_true(p, (0, 3), (5, 1))
        assert not grid_list_is_true(p, (0, 1), (5, 1))


class TestConsistency:
    @pytest.mark.parametrize("rule", [BRIER, LOG], ids=lambda r: r.name)
    def test_small_grid_passes(self, rule):
        report = check_consistency(rule, 3, 1, 8)
        assert report.consistent and report.strictly_consistent and report.passed
        assert report.n_distributions == 45
        assert report.n_candidates == candidate_count(3, 1, 8)

    def test_valid_only_drops_invalid_candidates(self):
        full = check_consistency(BRIER, 3, 1, 8)
        valid = check_consistency(BRIER, 3, 1, 8, include_invalid=False)
        assert valid.n_candidates < full.n_candidates
        assert valid.passed and valid.strict_expected

    def test_zero_penalty_loses_strictness_on_the_invalid_example(self):
        report = check_consistency(BRIER, 4, 2, 10, PenaltyConfig(0.0))
        assert report.consistent and not report.strictly_consistent
        assert not report.strict_expected and report.passed
        witness = [f for f in report.strictness_failures if f.p == (4, 2, 2, 2)]
        assert any(f.classes == ("1", "2") and f.confidences == (4, 1) and not f.valid for f in witness)
        assert all(not f.valid for f in report.strictness_failures)
        assert "s=({1,2},(4/10,1/10)) [invalid]" in next(
            f.describe(10) for f in witness if f.classes == ("1", "2") and f.confidences == (4, 1)
        )

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            check_consistency(BRIER, 4, 2, 8, budget=1000)

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            check_consistency(BRIER, 3, 4, 5)

    def test_report_dict(self):
        d = check_consistency(BRIER, 3, 2, 4).to_dict()
        assert d["passed"] and d["violations"] == () and d["rule"] == "brier"


class TestMajorizationOfTrueLists:
    def test_grid(self):
        grid = SimplexGrid(4, 6)
        for nums in grid:
            p = grid.categorical(nums, U4)
            assert all(check_true_list_majorization(p, k) for k in range(5))


class TestComparability:
    def test_moderate_brier_chain(self):
        chain = true_list_chain(BRIER, Categorical(U5, P_MODERATE))
        assert [round(x, 4) for x in chain[1:3]] == [0.6875, 0.5867]
        assert chain[-1] == pytest.approx(0.5862, abs=1e-12)
        assert check_comparability(BRIER, Categorical(U5, P_MODERATE))

    def test_low_log_chain(self):
        chain = true_list_chain(LOG, Categorical(U5, P_LOW))
        assert [round(x, 4) for x in (chain[1], chain[2], chain[5])] == [1.6021, 1.5984, 1.5948]
        assert chain[0] == pytest.approx(math.log(5), abs=1e-14)

    @pytest.mark.parametrize("rule", [BRIER, LOG], ids=lambda r: r.name)
    def test_uniform_chain_is_flat(self, rule):
        chain = true_list_chain(rule, Categorical.uniform(U5))
        assert max(chain) - min(chain) < 1e-12

    @pytest.mark.parametrize("rule", [BRIER, LOG], ids=lambda r: r.name)
    def test_random(self, rule):
        rng = np.random.default_rng(1)
        for m in (2, 4, 7):
            u = ClassUniverse.numbered(m)
            assert all(check_comparability(rule, random_categorical(u, rng)) for _ in range(100))


class TestBrierBound:
    t = TopList(U5, ["1"], [0.99])

    def test_high_predictability_instance(self):
        q = Categorical(U5, P_HIGH)
        assert worst_case_distribution(self.t).probs == pytest.approx(q.probs, abs=1e-15)
        gap = relative_gap(BRIER, self.t, q)
        assert gap == pytest.approx(0.0037878787878788, abs=1e-12)
        assert round(100 * gap, 2) == 0.38
        assert gap < self.t.alpha
        assert round(100 * relative_gap(LOG, self.t, q), 2) == 24.75

    def test_worst_case_dominates_samples(self):
        worst = relative_gap(BRIER, self.t, worst_case_distribution(self.t))
        for q in sample_true_distributions(self.t, 50, seed=4):
            assert top_k_functional(q, 1) == self.t
            assert relative_gap(BRIER, self.t, q) <= worst + 1e-12

    def test_random_lists(self):
        rng = np.random.default_rng(6)
        for i in range(50):
            t = random_alpha_list(int(rng.integers(2, 11)), rng)
            assert 0 < t.alpha < min(t.confidences)
            assert check_brier_alpha_bound(t, trials=10, seed=i)

    def test_requires_alpha_window(self):
        with pytest.raises(ValueError):
            worst_case_distribution(TopList(U5, ["1"], [1.0]))
        with pytest.raises(ValueError):
            check_brier_alpha_bound(TopList(U5, ["1"], [0.3]))

    def test_sampling_is_deterministic(self):
        a = sample_true_distributions(self.t, 5, seed=9)
        b = sample_true_distributions(self.t, 5, seed=9)
        assert a == b


class TestEntropyOracles:
    def test_brier_entropy_along_majorization(self):
        u3 = ClassUniverse.numbered(3)
        assert BRIER.entropy(Categorical(u3, [0.5, 0.5, 0])) == pytest.approx(0.5, abs=1e-15)
        assert BRIER.entropy(Categorical(u3, [0.5, 0.25, 0.25])) == pytest.approx(0.625, abs=1e-15)

    @pytest.mark.parametrize("rule", [BRIER, LOG], ids=lambda r: r.name)
    def test_uniform_is_the_maximum_on_a_grid(self, rule):
        u3 = ClassUniverse.numbered(3)
        grid = SimplexGrid(3, 9)
        top = rule.entropy(Categorical.uniform(u3))
        for nums in grid:
            if nums != (3, 3, 3):
                assert rule.entropy(grid.categorical(nums, u3)) < top

    @pytest.mark.parametrize("rule", [BRIER, LOG], ids=lambda r: r.name)
    def test_schur_concavity(self, rule):
        assert check_entropy_schur_concavity(rule, 4, trials=200, seed=2)

    def test_schur_needs_two_classes(self):
        with pytest.raises(ValueError):
            check_entropy_schur_concavity(BRIER, 1)

    @pytest.mark.parametrize("rule", [BRIER, LOG], ids=lambda r: r.name)
    def test_symmetry_and_propriety(self, rule):
        assert check_symmetry(rule, 6, trials=200, seed=3)
        assert check_propriety(rule, 3, 8)

    def test_random_categorical_shapes(self):
        rng = np.random.default_rng(0)
        u = ClassUniverse.numbered(6)
        draws = [random_categorical(u, rng) for _ in range(200)]
        assert any(0.0 in p.probs for p in draws)
        assert any(len(set(p.probs)) < 6 for p in draws)
        assert all(abs(math.fsum(p.probs) - 1) < 1e-9 for p in draws)


def test_sub_resolution_mass_breaks_the_log_chain():
    # the listed confidences already sum to 1.0 in floats, so the third class pads to zero
    p = Categorical(ClassUniverse.numbered(3), [0.9999680911748708, 3.190882512916878e-05, 3.1819927796173136e-17])
    chain = true_list_chain(LOG, p)
    assert chain[2] == math.inf and math.isfinite(chain[3])
    assert check_comparability(BRIER, p)
    rng = np.random.default_rng(0)
    u = ClassUniverse.numbered(8)
    assert all(q == 0.0 or q >= 1e-12 for _ in range(500) for q in random_categorical(u, rng).probs)
