# -*- coding: utf-8 -*-
"""Matching costs, the Hungarian solver and the matcher."""

import itertools

import numpy as np
import pytest
import torch

from conftest import corner_box, gt, pred, random_box
from hoi_core.assignment import (
    HungarianMatcher,
    action_class_cost,
    action_class_cost_matrix,
    assignment_cost,
    build_cost_matrix,
    hungarian,
    match,
    object_class_cost,
    pair_box_cost,
    pair_giou_cost,
)
from hoi_core.errors import ValidationError
from hoi_core.models import CostWeights, HoiTargets, NormBox, PredictionSet

HUMAN = corner_box(0.1, 0.1, 0.4, 0.6)
OBJECT = corner_box(0.5, 0.2, 0.9, 0.7)


def _brute_force_minimum(cost: np.ndarray) -> float:
    n = cost.shape[0]
    return min(sum(cost[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def _lexicographic_optimum(cost: np.ndarray) -> list:
    n = cost.shape[0]
    best, best_cost = None, np.inf
    for permutation in itertools.permutations(range(n)):
        total = sum(cost[i, permutation[i]] for i in range(n))
        if total < best_cost:
            best, best_cost = list(permutation), total
    return best


def _random_prediction(generator: torch.Generator, n_obj: int = 2, n_act: int = 2):
    object_probs = torch.softmax(torch.randn(n_obj + 1, generator=generator, dtype=torch.float64), dim=0)
    action_probs = torch.rand(n_act, generator=generator, dtype=torch.float64)
    return pred(random_box(generator), random_box(generator), object_probs.tolist(), action_probs.tolist())


class TestPairCosts:
    def test_box_cost_identity(self):
        assert pair_box_cost(gt(HUMAN, OBJECT), pred(HUMAN, OBJECT, (1, 0), (1, 0))) == 0.0

    def test_box_cost_object_offset(self):
        shifted = NormBox(OBJECT.cx + 0.05, OBJECT.cy, OBJECT.w, OBJECT.h)
        assert pair_box_cost(gt(HUMAN, OBJECT), pred(HUMAN, shifted)) == pytest.approx(0.05, abs=1e-12)

    def test_box_cost_takes_larger(self):
        human = NormBox(0.5, 0.5, 0.2, 0.2)
        obj = NormBox(0.5, 0.5, 0.2, 0.2)
        cost = pair_box_cost(gt(human, obj), pred(NormBox(0.8, 0.5, 0.2, 0.2), NormBox(0.6, 0.5, 0.2, 0.2)))
        assert cost == pytest.approx(0.3, abs=1e-12)

    def test_giou_cost(self):
        assert pair_giou_cost(gt(HUMAN, OBJECT), pred(HUMAN, OBJECT)) == pytest.approx(-1.0, abs=1e-12)
        half = corner_box(0, 0, 0.5, 0.5)
        shifted = corner_box(0.25, 0, 0.75, 0.5)
        assert pair_giou_cost(gt(HUMAN, half), pred(HUMAN, shifted)) == pytest.approx(-1 / 3, abs=1e-12)
        a, b = corner_box(0, 0, 0.2, 0.2), corner_box(0.8, 0.8, 1, 1)
        assert pair_giou_cost(gt(a, a), pred(b, b)) == pytest.approx(0.92, abs=1e-12)

    @pytest.mark.parametrize("probability", [0.7, 1.0, 0.0])
    def test_object_class_cost(self, probability):
        prediction = pred(HUMAN, OBJECT, (probability, 1.0 - probability))
        assert object_class_cost(gt(HUMAN, OBJECT, object_class=1), prediction) == pytest.approx(-probability)

    def test_action_cost_exact(self):
        cost = action_class_cost(gt(HUMAN, OBJECT, actions=(1, 0, 0)), pred(HUMAN, OBJECT, (1, 0), (1, 0, 0)))
        assert cost == pytest.approx(-0.5 * (1 / 1.0001 + 2 / 2.0001), abs=1e-12)
        assert cost == pytest.approx(-0.9999, abs=1e-4)

    def test_action_cost_uniform(self):
        cost = action_class_cost(gt(HUMAN, OBJECT, actions=(1, 1, 0)),
                                 pred(HUMAN, OBJECT, (1, 0), (0.5, 0.5, 0.5)))
        assert cost == pytest.approx(-0.5, abs=1e-3)

    def test_action_cost_opposite(self):
        cost = action_class_cost(gt(HUMAN, OBJECT, actions=(1, 0)), pred(HUMAN, OBJECT, (1, 0), (0, 1)))
        assert cost == pytest.approx(0.0, abs=1e-12)

    def test_action_cost_needs_positive_epsilon(self):
        with pytest.raises(ValidationError):
            action_class_cost(gt(HUMAN, OBJECT), pred(HUMAN, OBJECT), epsilon=0.0)

    def test_action_cost_range_over_random_pairs(self):
        generator = torch.Generator().manual_seed(11)
        n, n_act = 100, 5
        actions = (torch.rand(n, n_act, generator=generator, dtype=torch.float64) < 0.4).to(torch.float64)
        actions[0] = 1.0
        actions[1] = 0.0
        probs = torch.rand(n, n_act, generator=generator, dtype=torch.float64)
        probs[0] = 1.0
        probs[1] = 0.0
        boxes = torch.full((n, 4), 0.5, dtype=torch.float64)
        targets = HoiTargets(boxes, boxes, torch.zeros(n, dtype=torch.long), actions)
        preds = PredictionSet(boxes, boxes, torch.full((n, 3), 1 / 3, dtype=torch.float64), probs)
        cost = action_class_cost_matrix(targets, preds, 1e-4)
        assert cost.shape == (n, n)
        assert bool((cost >= -1.0).all()) and bool((cost <= 0.0).all())


class TestCostMatrix:
    def test_no_ground_truths(self):
        generator = torch.Generator().manual_seed(0)
        preds = [_random_prediction(generator) for _ in range(3)]
        cost = build_cost_matrix([], preds)
        assert cost.shape == (3, 3)
        assert not cost.any()

    def test_weighted_sum(self):
        preds = [pred(HUMAN, OBJECT, (1, 0), (1, 0)), pred(corner_box(0, 0, 0.1, 0.1), OBJECT, (0, 1), (0, 1))]
        cost = build_cost_matrix([gt(HUMAN, OBJECT)], preds)
        assert cost[0, 0] == pytest.approx(-3.0, abs=1e-3)
        assert not cost[1].any()

    def test_weights_scale_terms(self):
        preds = [pred(HUMAN, OBJECT, (0.7, 0.3), (1, 0))]
        cost = build_cost_matrix([gt(HUMAN, OBJECT)], preds, CostWeights(eta_b=0, eta_u=0, eta_c=2, eta_a=0))
        assert cost[0, 0] == pytest.approx(-1.4, abs=1e-12)

    def test_too_many_ground_truths(self):
        with pytest.raises(ValidationError):
            build_cost_matrix([gt(HUMAN, OBJECT), gt(OBJECT, HUMAN)], [pred(HUMAN, OBJECT)])

    def test_bitwise_deterministic(self):
        generator = torch.Generator().manual_seed(5)
        preds = [_random_prediction(generator) for _ in range(6)]
        gts = [gt(HUMAN, OBJECT, object_class=1, actions=(1, 0)), gt(OBJECT, HUMAN, object_class=2, actions=(1, 1))]
        assert np.array_equal(build_cost_matrix(gts, preds), build_cost_matrix(gts, preds))


class TestHungarian:
    def test_diagonal_optimum(self):
        cost = np.array([[0.0, 1.0], [1.0, 0.0]])
        permutation = hungarian(cost)
        assert permutation.tolist() == [0, 1]
        assert assignment_cost(cost, permutation) == 0.0

    def test_identity_when_tied_off_diagonal(self):
        cost = np.array([[1.0, 2.0], [2.0, 1.0]])
        permutation = hungarian(cost)
        assert permutation.tolist() == [0, 1]
        assert assignment_cost(cost, permutation) == 2.0

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_brute_force(self, seed):
        cost = np.random.default_rng(seed).normal(size=(7, 7))
        permutation = hungarian(cost)
        assert sorted(permutation.tolist()) == list(range(7))
        assert assignment_cost(cost, permutation) == pytest.approx(_brute_force_minimum(cost), abs=1e-12)

    def test_uniform_matrices_against_exhaustive_search(self):
        rng = np.random.default_rng(2024)
        permutations = {n: np.array(list(itertools.permutations(range(n)))) for n in range(2, 9)}
        for _ in range(1000):
            n = int(rng.integers(2, 9))
            cost = rng.uniform(-1.0, 1.0, size=(n, n))
            permutation = hungarian(cost)
            assert sorted(permutation.tolist()) == list(range(n))
            best = cost[np.arange(n), permutations[n]].sum(axis=1).min()
            assert assignment_cost(cost, permutation) == pytest.approx(best, abs=1e-12)

    def test_ties_resolve_to_lexicographically_smallest(self):
        cost = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 1.0, 1.0]])
        assert hungarian(cost).tolist() == [0, 2, 1]

    def test_ties_on_binary_matrices(self):
        rng = np.random.default_rng(17)
        for _ in range(300):
            n = int(rng.integers(2, 7))
            cost = rng.integers(0, 2, size=(n, n)).astype(np.float64)
            assert hungarian(cost).tolist() == _lexicographic_optimum(cost)

    def test_rectangular_rejected(self):
        with pytest.raises(ValidationError):
            hungarian(np.zeros((2, 3)))

    @pytest.mark.parametrize("bad", [np.nan, np.inf])
    def test_non_finite_rejected(self, bad):
        cost = np.zeros((3, 3))
        cost[1, 2] = bad
        with pytest.raises(ValidationError):
            hungarian(cost)

    def test_empty(self):
        assert hungarian(np.zeros((0, 0))).tolist() == []


class TestMatcher:
    def test_no_ground_truths(self):
        generator = torch.Generator().manual_seed(1)
        assignment = match([], [_random_prediction(generator) for _ in range(4)])
        assert sorted(assignment.permutation) == [0, 1, 2, 3]
        assert assignment.padded_set == frozenset(range(4))
        assert assignment.matched_pairs() == []

    def test_exact_duplicate_wins(self):
        generator = torch.Generator().manual_seed(2)
        preds = [_random_prediction(generator) for _ in range(5)]
        target = gt(HUMAN, OBJECT, object_class=2, actions=(0, 1))
        preds[2] = pred(HUMAN, OBJECT, (0.0, 1.0, 0.0), (0.0, 1.0))
        assignment = HungarianMatcher().match([target], preds)
        assert assignment.permutation[0] == 2
        assert assignment.n_real == 1
        assert assignment.padded_set == frozenset(range(1, 5))

    def test_two_duplicates(self):
        generator = torch.Generator().manual_seed(3)
        preds = [_random_prediction(generator) for _ in range(4)]
        first = gt(HUMAN, OBJECT, object_class=1, actions=(1, 0))
        second = gt(OBJECT, HUMAN, object_class=2, actions=(1, 1))
        preds[3] = pred(HUMAN, OBJECT, (1.0, 0.0, 0.0), (1.0, 0.0))
        preds[1] = pred(OBJECT, HUMAN, (0.0, 1.0, 0.0), (1.0, 1.0))
        assignment = match([first, second], preds)
        assert assignment.matched_pairs() == [(0, 3), (1, 1)]

        cost = build_cost_matrix([first, second], preds)
        assert assignment_cost(cost, np.array(assignment.permutation)) == pytest.approx(
            _brute_force_minimum(cost), abs=1e-12)

    def test_padding_gets_sorted_leftovers(self):
        generator = torch.Generator().manual_seed(4)
        preds = [_random_prediction(generator) for _ in range(5)]
        assignment = match([gt(HUMAN, OBJECT)], preds)
        leftovers = list(assignment.permutation[1:])
        assert leftovers == sorted(leftovers)
        assert assignment.to_dict()["padded_set"] == [1, 2, 3, 4]

    def test_padding_rows_do_not_move_real_matches(self):
        generator = torch.Generator().manual_seed(6)
        preds = [_random_prediction(generator) for _ in range(6)]
        gts = [gt(HUMAN, OBJECT, object_class=1, actions=(1, 0)), gt(OBJECT, HUMAN, object_class=2, actions=(0, 1))]
        cost = build_cost_matrix(gts, preds)
        assert not cost[2:].any()
        real = cost[:2]
        best = min(real[0, a] + real[1, b] for a in range(6) for b in range(6) if a != b)
        assignment = match(gts, preds)
        matched = assignment.matched_pairs()
        assert real[0, matched[0][1]] + real[1, matched[1][1]] == pytest.approx(best, abs=1e-12)
