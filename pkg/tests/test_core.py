import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from strategies import categoricals, toplists
from toplists.core import (
    Categorical,
    ClassUniverse,
    EvalCase,
    TopList,
    UnknownClassError,
    UniverseMismatchError,
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

U4 = ClassUniverse.numbered(4)
U5 = ClassUniverse.numbered(5)
P31 = Categorical(U4, [0.5, 0.2, 0.2, 0.1])


class TestTypes:
    def test_universe_rejects_duplicates_and_empty(self):
        with pytest.raises(ValueError):
            ClassUniverse(["a", "b", "a"])
        with pytest.raises(ValueError):
            ClassUniverse([])

    def test_universe_index_follows_construction_order(self):
        u = ClassUniverse(["z", "a", "m"])
        assert [u.index(c) for c in "zam"] == [0, 1, 2]
        assert u.m == 3
        with pytest.raises(UnknownClassError):
            u.index("q")

    def test_categorical_renormalizes_within_tolerance(self):
        p = Categorical(ClassUniverse.numbered(3), [1 / 3 + 1e-10, 1 / 3, 1 / 3])
        assert math.isclose(math.fsum(p.probs), 1.0, abs_tol=1e-15)

    @pytest.mark.parametrize("probs", [[0.5, 0.6, -0.1], [0.5, 0.4, 0.0], [0.2, 0.2]])
    def test_categorical_rejects_bad_vectors(self, probs):
        with pytest.raises(ValueError):
            Categorical(ClassUniverse.numbered(3), probs)

    def test_toplist_structure(self):
        with pytest.raises(ValueError):
            TopList(U4, ["1", "1"], [0.2, 0.2])
        with pytest.raises(ValueError):
            TopList(U4, ["1", "2"], [0.7, 0.4])
        with pytest.raises(ValueError):
            TopList(U4, ["1", "2", "3", "4"], [0.1, 0.1, 0.1, 0.1])
        with pytest.raises(UnknownClassError):
            TopList(U4, ["9"], [0.1])
        with pytest.raises(ValueError):
            TopList(U4, ["1"], [0.1, 0.2])

    def test_toplist_order_is_canonical(self):
        assert TopList(U4, ["3", "1"], [0.1, 0.5]) == TopList(U4, ["1", "3"], [0.5, 0.1])

    def test_eval_case_canonicalizes_predictions(self):
        hard = EvalCase("2", "3", U4)
        assert hard.prediction == point_mass("2", U4) and hard.kind == "hard"
        dist = EvalCase(P31, "1")
        assert dist.prediction.k == 4 and dist.kind == "dist"
        with pytest.raises(UnknownClassError):
            EvalCase("2", "7", U4)
        with pytest.raises(UniverseMismatchError):
            EvalCase(TopList(U5, ["1"], [0.5]), "1", U4)


class TestProxyAndPad:
    def test_proxy_probability(self):
        assert proxy_probability(TopList(U4, ["1", "2"], [0.5, 0.2])) == pytest.approx(0.15, abs=1e-15)
        assert proxy_probability(TopList(U5)) == pytest.approx(0.2, abs=1e-15)
        assert proxy_probability(full_list(P31)) == 0.0

    def test_pad_examples(self):
        assert pad(TopList(U4, ["1", "2"], [0.5, 0.2])).probs == pytest.approx((0.5, 0.2, 0.15, 0.15), abs=1e-15)
        assert pad(TopList(U5)).probs == pytest.approx((0.2,) * 5, abs=1e-15)
        padded = pad(TopList(U5, ["1"], [0.99]))
        assert padded.probs == pytest.approx((0.99, 0.0025, 0.0025, 0.0025, 0.0025), abs=1e-15)
        assert math.fsum(padded.probs) == pytest.approx(1.0, abs=1e-15)

    def test_pad_of_full_list_is_identity(self):
        for k_list in top_k_functional(P31, 4, enumerate_all=True):
            assert pad(k_list) == P31

    def test_point_mass(self):
        t = point_mass("1", U5)
        assert t.classes == ("1",) and t.confidences == (1.0,)
        assert pad(t).probs == (1.0, 0.0, 0.0, 0.0, 0.0)
        assert is_valid(t)
        single = ClassUniverse(["x"])
        assert point_mass("x", single).k == single.m
        with pytest.raises(UnknownClassError):
            point_mass("6", U5)


class TestFourClassExample:
    """Distribution (0.5, 0.2, 0.2, 0.1) on four classes."""

    s = TopList(U4, ["1", "4"], [0.5, 0.1])
    r = TopList(U4, ["1", "4"], [0.5, 0.2])

    def test_validity(self):
        assert not is_valid(self.s)
        assert is_valid(self.r)
        assert is_valid(TopList(U4))

    def test_calibration(self):
        assert is_calibrated(self.s, P31)
        assert not is_calibrated(self.r, P31)
        assert is_calibrated(TopList(U4), P31)
        with pytest.raises(UniverseMismatchError):
            is_calibrated(TopList(U5), P31)

    def test_two_true_top2_lists(self):
        lists = top_k_functional(P31, 2, enumerate_all=True)
        assert set(lists) == {TopList(U4, ["1", "2"], [0.5, 0.2]), TopList(U4, ["1", "3"], [0.5, 0.2])}

    def test_canonical_true_list_breaks_ties_by_universe_order(self):
        assert top_k_functional(P31, 2) == TopList(U4, ["1", "2"], [0.5, 0.2])

    def test_extremes(self):
        assert top_k_functional(P31, 0) == TopList(U4)
        assert pad(top_k_functional(P31, 4)) == P31
        with pytest.raises(ValueError):
            top_k_functional(P31, 5)


class TestMode:
    def test_examples(self):
        assert mode(P31) == {"1"}
        assert mode(Categorical(ClassUniverse.numbered(3), [0.4, 0.4, 0.2])) == {"1", "2"}
        assert mode(Categorical.uniform(U5)) == set(U5.labels)


class TestLargestValidSublist:
    def test_examples(self):
        assert largest_valid_sublist(TopList(U4, ["1", "2"], [0.4, 0.1])) == TopList(U4, ["1"], [0.4])
        assert largest_valid_sublist(TestFourClassExample.s) == TopList(U4, ["1"], [0.5])
        u6 = ClassUniverse.numbered(6)
        tied = TopList(u6, ["1", "2", "3"], [0.3, 0.05, 0.05])
        assert largest_valid_sublist(tied) == TopList(u6, ["1"], [0.3])

    def test_tied_example_against_exhaustive_search(self):
        u6 = ClassUniverse.numbered(6)
        tied = TopList(u6, ["1", "2", "3"], [0.3, 0.05, 0.05])
        valid = [sub for sub in _sublists(tied) if is_valid(sub)]
        assert max(valid, key=lambda s: s.k) == TopList(u6, ["1"], [0.3])
        assert sum(1 for s in valid if s.k == 1) == 1

    def test_valid_list_is_returned_unchanged(self):
        assert largest_valid_sublist(TestFourClassExample.r) is TestFourClassExample.r


def _sublists(t: TopList):
    for r in range(t.k + 1):
        for keep in itertools.combinations(t.classes, r):
            yield t.sublist(keep)


class TestProperties:
    @given(toplists())
    def test_pad_sums_to_one_and_spreads_evenly(self, t):
        p = pad(t)
        assert abs(math.fsum(p.probs) - 1.0) <= 1e-9
        unlisted = {p[c] for c in t.universe.labels if c not in t.classes}
        assert len(unlisted) <= 1

    @given(toplists())
    def test_largest_valid_sublist_is_maximal_by_brute_force(self, t):
        result = largest_valid_sublist(t)
        assert is_valid(result)
        assert set(result.classes) <= set(t.classes)
        valid = [set(s.classes) for s in _sublists(t) if is_valid(s)]
        assert max(map(len, valid)) == result.k
        # every valid sublist sits inside the result
        assert all(v <= set(result.classes) for v in valid)
        if is_valid(t):
            assert result == t

    @given(categoricals(), st.data())
    def test_true_lists_are_valid_calibrated_and_share_confidences(self, p, data):
        k = data.draw(st.integers(0, p.universe.m))
        lists = top_k_functional(p, k, enumerate_all=True)
        assert top_k_functional(p, k) in lists
        assert len(set(lists)) == len(lists)
        multisets = {tuple(sorted(t.confidences)) for t in lists}
        assert len(multisets) == 1
        best = sum(sorted(p.probs, reverse=True)[:k])
        for t in lists:
            assert is_valid(t) and is_calibrated(t, p, tol=0.0)
            assert math.isclose(math.fsum(t.confidences), best, abs_tol=1e-12)

    @given(categoricals())
    def test_mode_matches_true_top1_classes(self, p):
        assert mode(p) == {t.classes[0] for t in top_k_functional(p, 1, enumerate_all=True)}

    @given(categoricals())
    def test_round_trip_on_full_lists(self, p):
        assert pad(top_k_functional(p, p.universe.m)) == p
