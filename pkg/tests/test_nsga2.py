import numpy as np
import pytest

from imputree.nsga2 import (
    binary_tournament,
    crowding_distance,
    dominates,
    fast_non_dominated_sort,
    nsga2_select,
    rank_and_crowding,
)

from _oracles import brute_fronts, brute_select, random_fitnesses


class TestDominance:
    def test_strictly_better_both(self):
        assert dominates((0.9, 1), (0.5, 3))

    def test_equal_one_better_other(self):
        assert dominates((0.9, 2), (0.9, 3))
        assert dominates((0.9, 2), (0.8, 2))

    def test_equal_pair_no_dominance(self):
        assert not dominates((0.9, 2), (0.9, 2))

    def test_tradeoff_incomparable(self):
        assert not dominates((0.9, 3), (0.8, 1))
        assert not dominates((0.8, 1), (0.9, 3))


class TestFronts:
    def test_three_point_example(self):
        fits = [(0.9, 3), (0.8, 1), (0.7, 5)]
        fronts = fast_non_dominated_sort(fits)
        assert fronts == [[0, 1], [2]]

    def test_matches_brute_force(self):
        rng = np.random.default_rng(123)
        for _ in range(60):
            fits = random_fitnesses(int(rng.integers(1, 65)), rng)
            assert fast_non_dominated_sort(fits) == brute_fronts(fits)

    def test_all_equal_single_front(self):
        fits = [(0.5, 2)] * 5
        assert fast_non_dominated_sort(fits) == [[0, 1, 2, 3, 4]]


class TestCrowding:
    def test_hand_example(self):
        fits = [(0.5, 1), (0.7, 3), (0.9, 5)]
        crowd = crowding_distance(fits, [0, 1, 2])
        assert crowd[0] == np.inf and crowd[2] == np.inf
        assert crowd[1] == pytest.approx(2.0)

    def test_pairs_are_boundaries(self):
        crowd = crowding_distance([(0.5, 1), (0.9, 2)], [0, 1])
        assert np.isinf(crowd).all()

    def test_zero_spread_objective_ignored(self):
        fits = [(0.2, 2), (0.5, 2), (0.9, 2)]
        crowd = crowding_distance(fits, [0, 1, 2])
        assert crowd[1] == pytest.approx((0.9 - 0.2) / 0.7)


class TestSelection:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(77)
        for _ in range(60):
            n = int(rng.integers(2, 65))
            fits = random_fitnesses(n, rng)
            k = int(rng.integers(1, n + 1))
            assert nsga2_select(fits, k) == brute_select(fits, k)

    def test_k_above_population_rejected(self):
        with pytest.raises(ValueError, match="population"):
            nsga2_select([(0.5, 1), (0.6, 2)], 3)

    def test_k_equal_population_keeps_everyone(self):
        fits = [(0.5, 1), (0.6, 2), (0.4, 3)]
        assert sorted(nsga2_select(fits, 3)) == [0, 1, 2]

    def test_identical_fitness_ties_break_by_index(self):
        fits = [(0.5, 2)] * 4
        assert nsga2_select(fits, 2) == [0, 3]

    def test_truncation_prefers_boundary_then_accuracy(self):
        # one front; the straddling cut keeps the extreme points first
        fits = [(0.9, 4), (0.8, 3), (0.7, 2), (0.6, 1)]
        chosen = nsga2_select(fits, 2)
        assert chosen == [0, 3]


class TestTournament:
    class _FakeRng:
        def __init__(self, draws):
            self.draws = list(draws)

        def integers(self, n):
            return self.draws.pop(0)

    def test_lower_rank_wins(self):
        fits = [(0.5, 2), (0.9, 1)]
        ranks = np.array([1, 0])
        crowd = np.array([np.inf, 0.0])
        winner = binary_tournament(ranks, crowd, fits, self._FakeRng([0, 1]))
        assert winner == 1

    def test_crowding_breaks_rank_tie(self):
        fits = [(0.5, 2), (0.9, 1)]
        ranks = np.array([0, 0])
        crowd = np.array([3.0, 1.0])
        winner = binary_tournament(ranks, crowd, fits, self._FakeRng([0, 1]))
        assert winner == 0

    def test_accuracy_breaks_full_tie(self):
        fits = [(0.5, 2), (0.9, 2)]
        ranks = np.array([0, 0])
        crowd = np.array([np.inf, np.inf])
        winner = binary_tournament(ranks, crowd, fits, self._FakeRng([0, 1]))
        assert winner == 1

    def test_rank_and_crowding_shapes(self):
        fits = [(0.9, 3), (0.8, 1), (0.7, 5)]
        ranks, crowd = rank_and_crowding(fits)
        assert ranks.tolist() == [0, 0, 1]
        assert np.isinf(crowd[:2]).all()
