"""Preference relations over allocations and their pairwise comparison.

Four variants are supported:

* :class:`ExpectedUtility` -- ``p >= q`` iff ``<u, p> >= <u, q>``.
* :class:`StochasticDominance` -- ``p >= q`` iff for every utility level ``x``
  the probability of getting at least ``x`` is no smaller under ``p``.
  This is a partial order; two allocations may be incomparable.
* :class:`TrivialReflexive` -- every allocation is comparable only to itself.
* :class:`BinaryRanking` -- a two-outcome expected-utility relation with a
  one-hot utility on the favored outcome.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from piif.core import TOL, Allocation, NoUtility, ValidationError, _check_lengths, rescale_unit


class WrongVariant(TypeError):
    """Operation requested on a relation of the wrong variant."""


class Comparison(enum.Enum):
    WEAKLY_PREFERRED = "weakly_preferred"
    NOT_WEAKLY_PREFERRED = "not_weakly_preferred"
    INCOMPARABLE = "incomparable"

    def __bool__(self) -> bool:
        return self is Comparison.WEAKLY_PREFERRED


def _as_tuple(u: Sequence[float]) -> tuple[float, ...]:
    values = tuple(float(x) for x in u)
    if not values:
        raise ValidationError("utility vector must be non-empty")
    if not all(np.isfinite(values)):
        raise ValidationError(f"utility vector has non-finite entries: {values}")
    return values


@dataclass(frozen=True)
class ExpectedUtility:
    u: tuple[float, ...]

    def __init__(self, u: Sequence[float]):
        object.__setattr__(self, "u", _as_tuple(u))

    def validate(self, n_outcomes: int) -> None:
        if len(self.u) != n_outcomes:
            raise ValidationError(f"utility vector has length {len(self.u)}, expected {n_outcomes}")

    def utility(self) -> tuple[float, ...]:
        return self.u

    def normalized(self) -> ExpectedUtility:
        return ExpectedUtility(rescale_unit(self.u))


@dataclass(frozen=True)
class StochasticDominance:
    u: tuple[float, ...]
    M: float

    def __init__(self, u: Sequence[float], M: float | None = None):
        values = _as_tuple(u)
        bound = max(values) if M is None else float(M)
        if min(values) < 0 or max(values) > bound:
            raise ValidationError(f"stochastic-dominance utilities must lie in [0, M={bound}]")
        object.__setattr__(self, "u", values)
        object.__setattr__(self, "M", bound)

    def validate(self, n_outcomes: int) -> None:
        if len(self.u) != n_outcomes:
            raise ValidationError(f"utility vector has length {len(self.u)}, expected {n_outcomes}")

    def utility(self) -> tuple[float, ...]:
        return self.u

    def normalized(self) -> StochasticDominance:
        v = rescale_unit(self.u)
        return StochasticDominance(v, 1.0 if max(v) > 0 else 0.0)


@dataclass(frozen=True)
class TrivialReflexive:
    def validate(self, n_outcomes: int) -> None:
        pass

    def utility(self) -> tuple[float, ...]:
        raise NoUtility("the trivial reflexive relation has no utility representation")

    def normalized(self) -> TrivialReflexive:
        return self


@dataclass(frozen=True)
class BinaryRanking:
    favored: int

    def validate(self, n_outcomes: int) -> None:
        if n_outcomes != 2:
            raise ValidationError("binary ranking requires exactly two outcomes")
        if self.favored not in (0, 1):
            raise ValidationError(f"favored outcome must be 0 or 1, got {self.favored}")

    def utility(self) -> tuple[float, ...]:
        return (1.0, 0.0) if self.favored == 0 else (0.0, 1.0)

    def normalized(self) -> BinaryRanking:
        return self


PreferenceRelation = Union[ExpectedUtility, StochasticDominance, TrivialReflexive, BinaryRanking]


def has_utility(rel: PreferenceRelation) -> bool:
    return not isinstance(rel, TrivialReflexive)


def sorted_outcome_order(rel: PreferenceRelation) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Outcomes by decreasing utility, plus the end positions of each tie group.

    >>> sorted_outcome_order(StochasticDominance([1, 2, 3]))
    ((2, 1, 0), (1, 2, 3))
    >>> sorted_outcome_order(StochasticDominance([0.2, 0.9, 0.9]))
    ((1, 2, 0), (2, 3))
    """
    if not isinstance(rel, StochasticDominance):
        raise WrongVariant(f"sorted_outcome_order needs a StochasticDominance relation, got {type(rel).__name__}")
    u = rel.u
    order = tuple(sorted(range(len(u)), key=lambda c: (-u[c], c)))
    boundaries = [r for r in range(1, len(u)) if u[order[r - 1]] > u[order[r]]]
    boundaries.append(len(u))
    return order, tuple(boundaries)


def survival_gaps(rel: StochasticDominance, p: Allocation, q: Allocation) -> np.ndarray:
    """``Pr_p[u >= x] - Pr_q[u >= x]`` at each distinct utility level except the lowest."""
    order, bounds = sorted_outcome_order(rel)
    diff = (p.as_array() - q.as_array())[list(order)]
    prefix = np.cumsum(diff)
    return prefix[[r - 1 for r in bounds[:-1]]]


def weakly_prefers(rel: PreferenceRelation, p: Allocation, q: Allocation, tol: float = TOL) -> Comparison:
    """Is ``p`` weakly preferred to ``q`` under ``rel``?"""
    _check_lengths(p, q)
    if isinstance(rel, (ExpectedUtility, BinaryRanking)):
        u = np.asarray(rel.utility())
        if u @ p.as_array() >= u @ q.as_array() - tol:
            return Comparison.WEAKLY_PREFERRED
        return Comparison.NOT_WEAKLY_PREFERRED
    if isinstance(rel, StochasticDominance):
        gaps = survival_gaps(rel, p, q)
        if np.all(gaps >= -tol):
            return Comparison.WEAKLY_PREFERRED
        if np.all(gaps <= tol):
            # q dominates p and the forward test failed, so the dominance is strict
            return Comparison.NOT_WEAKLY_PREFERRED
        return Comparison.INCOMPARABLE
    if isinstance(rel, TrivialReflexive):
        return Comparison.WEAKLY_PREFERRED if p.isclose(q, tol) else Comparison.INCOMPARABLE
    raise WrongVariant(f"unknown preference relation {rel!r}")
