"""Tests for the bipartite matcher."""

import itertools
import math

import numpy as np
import pytest
import torch

from sia.detector.detector import DetectorOutput
from sia.matching import CostMatrix, build_match_cost, hungarian, match_clip
from sia.models.annotations import KeyframeAnnotation
from sia.models.boxes import BoxCXCYWH, BoxXYXY
from sia.models.detection import DetectionTriplet


def _brute_force(values: np.ndarray):
    """All optimal sorted pair lists and the optimal cost."""
    n, m = values.shape
    k = min(n, m)
    best, optima = math.inf, []
    for rows in itertools.permutations(range(n), k) if n >= m else [None]:
        for cols in [range(m)] if n >= m else itertools.permutations(range(m), k):
            pairs = sorted(zip(rows, cols)) if n >= m else sorted(zip(range(n), cols))
            cost = math.fsum(values[i, j] for i, j in pairs)
            if cost < best - 1e-9:
                best, optima = cost, [pairs]
            elif abs(cost - best) <= 1e-9:
                optima.append(pairs)
    return best, optima


class TestHungarian:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            n, m = int(rng.integers(1, 8)), int(rng.integers(0, 8))
            values = rng.normal(size=(n, m))
            result = hungarian(values)
            if m == 0:
                assert result.pairs == []
                continue
            best, optima = _brute_force(values)
            assert len(result.pairs) == min(n, m)
            assert result.total_cost == pytest.approx(best, abs=1e-9)
            assert len({j for _, j in result.pairs}) == len(result.pairs)
            assert result.pairs in optima

    def test_canonical_ties(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n, m = int(rng.integers(1, 6)), int(rng.integers(1, 6))
            values = rng.integers(0, 3, size=(n, m)).astype(float)
            best, optima = _brute_force(values)
            result = hungarian(values, canonical=True)
            assert result.total_cost == pytest.approx(best)
            assert result.pairs == min(optima)

    def test_all_equal_costs(self):
        result = hungarian(np.ones((4, 3)))
        assert result.pairs == [(0, 0), (1, 1), (2, 2)]

    def test_invalid_matrices(self):
        with pytest.raises(ValueError):
            CostMatrix(np.zeros((0, 3)))
        with pytest.raises(ValueError):
            CostMatrix(np.array([[0.0, np.inf]]))
        with pytest.raises(ValueError):
            CostMatrix(np.zeros(3))


def _triplet(cx, cy, w, h, p_act):
    return DetectionTriplet(box=BoxCXCYWH(cx=cx, cy=cy, w=w, h=h), p_act=p_act, e_v=[1.0, 0.0])


class TestMatchCost:
    def test_entries(self):
        triplets = [_triplet(0.5, 0.5, 0.2, 0.2, 0.9), _triplet(0.2, 0.2, 0.2, 0.2, 0.1)]
        ann = KeyframeAnnotation(
            clip_id="c", boxes=[BoxXYXY(x1=0.4, y1=0.4, x2=0.6, y2=0.6)], action_sets=[["walk"]]
        )
        cost = build_match_cost(triplets, ann)
        assert cost.shape == (2, 1)
        # identical box: L1 = 0 and GIoU = 1
        assert cost.values[0, 0] == pytest.approx(-2.0 * 0.9, abs=1e-6)
        assert cost.values[1, 0] > cost.values[0, 0]

    def test_no_ground_truth(self):
        cost = build_match_cost([_triplet(0.5, 0.5, 0.2, 0.2, 0.5)], torch.zeros(0, 4))
        assert cost.shape == (1, 0)
        assert hungarian(cost).pairs == []

    def test_empty_predictions_rejected(self):
        with pytest.raises(ValueError):
            build_match_cost([], torch.zeros(0, 4))

    def test_prefers_overlapping_confident_token(self):
        triplets = [
            _triplet(0.2, 0.2, 0.1, 0.1, 0.2),
            _triplet(0.75, 0.75, 0.3, 0.3, 0.95),
            _triplet(0.25, 0.25, 0.3, 0.3, 0.9),
        ]
        ann = KeyframeAnnotation(
            clip_id="c",
            boxes=[BoxXYXY(x1=0.1, y1=0.1, x2=0.4, y2=0.4), BoxXYXY(x1=0.6, y1=0.6, x2=0.9, y2=0.9)],
            action_sets=[["a"], ["b"]],
        )
        result = match_clip(DetectorOutput.from_triplets(triplets), ann)
        assert result.pairs == [(1, 1), (2, 0)]
