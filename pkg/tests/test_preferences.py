from __future__ import annotations

import doctest

import numpy as np
import pytest

from piif import preferences
from piif.core import Allocation, ValidationError
from piif.preferences import (
    BinaryRanking,
    Comparison,
    ExpectedUtility,
    StochasticDominance,
    TrivialReflexive,
    WrongVariant,
    sorted_outcome_order,
    weakly_prefers,
)

P, Q = Allocation.point_mass(0, 2), Allocation.point_mass(1, 2)


def test_doctests():
    result = doctest.testmod(preferences)
    assert result.failed == 0 and result.attempted > 0


def test_eu_table_example():
    assert weakly_prefers(ExpectedUtility((1, 0.5)), P, Q) is Comparison.WEAKLY_PREFERRED
    assert weakly_prefers(ExpectedUtility((1, 0.5)), Q, P) is Comparison.NOT_WEAKLY_PREFERRED


@pytest.mark.parametrize(
    "rel",
    [ExpectedUtility((0.3, 0.7, 0.1)), StochasticDominance((0.3, 0.7, 0.1)), TrivialReflexive()],
)
def test_reflexive(rel):
    p = Allocation([0.2, 0.5, 0.3])
    assert weakly_prefers(rel, p, p) is Comparison.WEAKLY_PREFERRED


def test_sd_crossing_survival_is_incomparable():
    rel = StochasticDominance((1, 0.5, 0))
    p, q = Allocation([0.5, 0, 0.5]), Allocation([0, 1, 0])
    assert weakly_prefers(rel, p, q) is Comparison.INCOMPARABLE
    assert weakly_prefers(rel, q, p) is Comparison.INCOMPARABLE


def test_sd_strict_dominance():
    rel = StochasticDominance((1, 0.5, 0))
    top, mid = Allocation.point_mass(0, 3), Allocation.point_mass(1, 3)
    assert weakly_prefers(rel, top, mid) is Comparison.WEAKLY_PREFERRED
    assert weakly_prefers(rel, mid, top) is Comparison.NOT_WEAKLY_PREFERRED


def test_sd_ties_are_merged():
    # swapping mass between tied outcomes is an equivalence, not a strict change
    rel = StochasticDominance((0.2, 0.9, 0.9))
    p, q = Allocation([0, 1, 0]), Allocation([0, 0, 1])
    assert weakly_prefers(rel, p, q) is Comparison.WEAKLY_PREFERRED
    assert weakly_prefers(rel, q, p) is Comparison.WEAKLY_PREFERRED


def test_trivial_is_incomparable_off_diagonal():
    assert weakly_prefers(TrivialReflexive(), P, Q) is Comparison.INCOMPARABLE


def test_binary_ranking_is_one_hot_eu():
    rel = BinaryRanking(1)
    assert rel.utility() == (0.0, 1.0)
    assert weakly_prefers(rel, Q, P)
    assert not weakly_prefers(rel, P, Q)
    with pytest.raises(ValidationError):
        rel.validate(3)


class TestSortedOrder:
    def test_ties(self):
        order, bounds = sorted_outcome_order(StochasticDominance((0.2, 0.9, 0.9)))
        assert set(order[:2]) == {1, 2} and order[2] == 0
        assert bounds == (2, 3)

    def test_strict(self):
        assert sorted_outcome_order(StochasticDominance((1, 2, 3))) == ((2, 1, 0), (1, 2, 3))

    def test_constant_single_group(self, rng):
        rel = StochasticDominance((5, 5, 5))
        assert sorted_outcome_order(rel)[1] == (3,)
        for _ in range(20):
            p, q = (Allocation(rng.dirichlet(np.ones(3))) for _ in range(2))
            assert weakly_prefers(rel, p, q) is Comparison.WEAKLY_PREFERRED

    def test_wrong_variant(self):
        with pytest.raises(WrongVariant):
            sorted_outcome_order(ExpectedUtility((1, 0)))


def test_sd_requires_bounded_utilities():
    with pytest.raises(ValidationError):
        StochasticDominance((2, -1), 1.0)
    assert StochasticDominance((0.5, 2)).M == 2


def test_sd_implies_eu(rng):
    for _ in range(300):
        u = rng.random(4)
        p, q = (Allocation(rng.dirichlet(np.ones(4) * 0.5)) for _ in range(2))
        if weakly_prefers(StochasticDominance(u), p, q):
            assert weakly_prefers(ExpectedUtility(u), p, q)
