import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hippobo.pareto import (
    Dataset,
    ParetoFront,
    ReferencePointWarning,
    dominates,
    extract_front,
    hv_regret,
    hypervolume,
    hypervolume_mc,
)

from oracles import brute_front, inclusion_exclusion_hv


def sorted_rows(a):
    return a[np.lexsort(a.T[::-1])]


objective_vectors = arrays(
    float, st.tuples(st.integers(1, 25), st.just(2)), elements=st.integers(0, 8).map(float)
)


class TestDominance:
    @pytest.mark.parametrize(
        "a, b, expected",
        [((1, 1), (2, 2), True), ((1, 2), (2, 1), False), ((1, 1), (1, 1), False), ((1, 2), (1, 3), True)],
    )
    def test_examples(self, a, b, expected):
        assert dominates(a, b) is expected

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dominates((1, 2), (1, 2, 3))

    @given(arrays(float, (3, 3), elements=st.integers(0, 3).map(float)))
    def test_strict_partial_order(self, v):
        a, b, c = v
        assert not dominates(a, a)
        assert not (dominates(a, b) and dominates(b, a))
        if dominates(a, b) and dominates(b, c):
            assert dominates(a, c)


class TestExtractFront:
    def test_examples(self):
        f = extract_front([(1, 2), (2, 1), (2, 2)])
        np.testing.assert_array_equal(f.members, [[1, 2], [2, 1]])
        np.testing.assert_array_equal(extract_front([(0, 0)]).members, [[0, 0]])

    def test_empty(self):
        assert len(extract_front(np.empty((0, 2)))) == 0

    def test_duplicates_collapse(self):
        assert len(extract_front([(1, 2), (1, 2), (2, 1)])) == 2

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_matches_pairwise_oracle(self, k):
        rng = np.random.default_rng(k)
        Y = rng.random((100, k))
        np.testing.assert_array_equal(sorted_rows(extract_front(Y).members), sorted_rows(brute_front(Y)))

    @given(objective_vectors)
    def test_matches_oracle_with_ties(self, Y):
        np.testing.assert_array_equal(sorted_rows(extract_front(Y).members), sorted_rows(brute_front(Y)))

    @given(objective_vectors)
    def test_idempotent(self, Y):
        once = extract_front(Y)
        np.testing.assert_array_equal(extract_front(once.members).members, once.members)

    def test_members_read_only(self):
        f = extract_front([(1, 2), (2, 1)])
        with pytest.raises(ValueError):
            f.members[0, 0] = 5


class TestHypervolume:
    def test_unit_box(self):
        assert hypervolume(ParetoFront([[0, 0]]), [1, 1]) == 1.0

    def test_two_points(self):
        assert hypervolume(extract_front([(1, 2), (2, 1)]), [3, 3]) == pytest.approx(3.0, abs=1e-12)
        assert inclusion_exclusion_hv([(1, 2), (2, 1)], np.array([3, 3])) == pytest.approx(3.0)

    def test_empty(self):
        assert hypervolume(ParetoFront(np.empty((0, 2))), [1, 1]) == 0.0

    def test_ref_mismatch(self):
        with pytest.raises(ValueError):
            hypervolume([(1, 2)], [3, 3, 3])

    def test_members_outside_ref_dropped_with_warning(self):
        with pytest.warns(ReferencePointWarning):
            hv = hypervolume([(0, 0), (2, -1)], [1, 1])
        assert hv == 1.0

    @pytest.mark.parametrize("k", [2, 3])
    def test_exact_matches_inclusion_exclusion(self, k):
        rng = np.random.default_rng(10 + k)
        for _ in range(20):
            front = extract_front(rng.random((rng.integers(1, 8), k))).members
            ref = np.full(k, 1.1)
            assert hypervolume(front, ref) == pytest.approx(inclusion_exclusion_hv(front, ref), rel=1e-12)

    def test_sweep_matches_mc_oracle(self):
        rng = np.random.default_rng(3)
        ref = np.array([1.0, 1.0])
        for _ in range(50):
            front = extract_front(rng.random((rng.integers(1, 12), 2)))
            exact = hypervolume(front, ref)
            est, se = hypervolume_mc(front, ref, n_samples=20_000, seed=int(rng.integers(1 << 30)))
            assert abs(exact - est) <= 4 * se + 1e-12

    def test_four_objectives_mc(self):
        rng = np.random.default_rng(4)
        front = extract_front(rng.random((5, 4)))
        ref = np.ones(4)
        est, se = hypervolume_mc(front, ref, n_samples=200_000)
        assert abs(est - inclusion_exclusion_hv(front.members, ref)) < 4 * se
        assert hypervolume(front, ref, n_samples=200_000) == est

    @given(objective_vectors, arrays(float, 2, elements=st.floats(0, 8)))
    @settings(max_examples=50)
    def test_monotone(self, Y, new):
        ref = np.array([9.0, 9.0])
        before = hypervolume(Y, ref)
        after = hypervolume(np.vstack([Y, new]), ref)
        assert after >= before - 1e-12
        if any(dominates(y, new) for y in Y):
            assert after == pytest.approx(before, abs=1e-12)


class TestRegret:
    def test_identical(self):
        f = extract_front([(0, 1), (1, 0), (0.5, 0.5)])
        assert hv_regret(f, f, [2, 2]) == 0.0

    def test_empty_discovery(self):
        f = extract_front([(0, 1), (1, 0)])
        assert hv_regret(ParetoFront(np.empty((0, 2))), f, [2, 2]) == hypervolume(f, [2, 2])

    def test_dominated_subset(self):
        true = extract_front([(0, 1), (1, 0), (0.3, 0.3)])
        found = extract_front([(0.1, 1.2), (0.5, 0.5)])
        r = hv_regret(found, true, [2, 2])
        assert r > 0
        assert r == pytest.approx(hypervolume(true, [2, 2]) - hypervolume(found, [2, 2]))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            hv_regret([(0, 1, 2)], [(0, 1)], [2, 2])

    def test_non_increasing_as_front_grows(self):
        rng = np.random.default_rng(0)
        true = extract_front(np.column_stack([np.linspace(0, 1, 50), 1 - np.linspace(0, 1, 50)]))
        Y = rng.random((40, 2)) + 0.05
        prev = np.inf
        for i in range(1, len(Y) + 1):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ReferencePointWarning)
                r = hv_regret(Y[:i], true, [1.2, 1.2])
            assert r <= prev + 1e-12
            prev = r


def test_dataset_validation():
    d = Dataset(np.zeros((3, 2)), np.ones((3, 2)))
    assert (len(d), d.n, d.k) == (3, 2, 2)
    assert len(d.append([[1, 1]], [[0, 0]])) == 4
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2)), np.ones((2, 2)))
