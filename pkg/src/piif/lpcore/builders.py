"""Constraint families for the fairness polytopes.

Every builder takes an :class:`LPModel`, appends rows (and possibly auxiliary
variables) and returns the model. An *operand* is either a variable block
(a list of variable ids) or a fixed allocation / vector, so the same builder
serves the optimizer (everything variable) and the auditor (the policy fixed,
only the surrogate variable).
"""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from piif.core import Allocation
from piif.lpcore.model import LPModel, Relation
from piif.preferences import PreferenceRelation, StochasticDominance, WrongVariant, sorted_outcome_order

Operand = Union[Sequence[int], Allocation, np.ndarray]


def _split(operand: Operand) -> tuple[list[int] | None, np.ndarray | None]:
    if isinstance(operand, Allocation):
        return None, operand.as_array()
    if isinstance(operand, np.ndarray) and operand.dtype.kind == "f":
        return None, operand
    return [int(v) for v in operand], None


def _linear(terms: dict[int, float], operand: Operand, weights: np.ndarray, sign: float) -> float:
    """Add ``sign * <weights, operand>`` to ``terms``; return the constant part."""
    ids, fixed = _split(operand)
    if fixed is not None:
        return sign * float(weights @ fixed)
    for v, w in zip(ids, weights):
        terms[v] = terms.get(v, 0.0) + sign * float(w)
    return 0.0


def add_simplex_constraints(m: LPModel, block: Sequence[int]) -> LPModel:
    """``sum_c x_c = 1`` and ``x_c >= 0`` on ``block``."""
    for v in block:
        m.lower[v] = max(m.lower[v], 0.0)
    m.add_constraint({v: 1.0 for v in block}, Relation.EQ, 1.0, name=f"simplex_{len(m.constraints)}")
    return m


def add_allocation_block(m: LPModel, name: str, n_outcomes: int) -> list[int]:
    """A fresh block of ``n_outcomes`` variables constrained to the simplex."""
    block = m.add_block(name, n_outcomes)
    add_simplex_constraints(m, block)
    return block


def add_tv_constraint(m: LPModel, p: Operand, q: Operand, bound: float, slack_name: str | None = None) -> LPModel:
    """``TV(p, q) <= bound`` via an auxiliary block ``z`` of absolute differences.

    Adds ``z_c >= p_c - q_c``, ``z_c >= q_c - p_c`` and ``0.5 * sum_c z_c <= bound``:
    ``2|C| + 1`` inequalities and ``|C|`` new variables.
    """
    if bound < 0:
        raise ValueError(f"TV bound must be nonnegative, got {bound}")
    k = len(p) if not isinstance(p, Allocation) else len(p.probs)
    name = slack_name or f"z_{len(m.blocks)}"
    z = m.add_block(name, k)
    for c in range(k):
        e = np.zeros(k)
        e[c] = 1.0
        for sign in (1.0, -1.0):
            terms = {z[c]: 1.0}
            const = _linear(terms, p, e, -sign) + _linear(terms, q, e, sign)
            m.add_constraint(terms, Relation.GE, -const, name=f"{name}_abs{'+' if sign > 0 else '-'}{c}")
    m.add_constraint({v: 0.5 for v in z}, Relation.LE, float(bound), name=f"{name}_tv")
    return m


def add_coordinate_constraints(m: LPModel, p: Operand, q: Operand, bounds: Sequence[float]) -> LPModel:
    """``|p_c - q_c| <= bounds[c]`` for every outcome, two rows each, no slack variables."""
    k = len(bounds)
    for c in range(k):
        e = np.zeros(k)
        e[c] = 1.0
        for sign in (1.0, -1.0):
            terms: dict[int, float] = {}
            const = _linear(terms, p, e, sign) + _linear(terms, q, e, -sign)
            m.add_constraint(terms, Relation.LE, float(bounds[c]) - const, name=f"coord{c}{'+' if sign > 0 else '-'}")
    return m


def add_eu_preference_constraint(
    m: LPModel, u: Sequence[float], preferred: Operand, dominated: Operand, slack: float = 0.0
) -> LPModel:
    """``<u, preferred> >= <u, dominated> - slack`` (one row)."""
    w = np.asarray(u, dtype=float)
    terms: dict[int, float] = {}
    const = _linear(terms, preferred, w, 1.0) + _linear(terms, dominated, w, -1.0)
    m.add_constraint(terms, Relation.GE, -const - slack, name=f"eu_{len(m.constraints)}")
    return m


def add_sd_preference_constraints(
    m: LPModel, rel: PreferenceRelation, preferred: Operand, dominated: Operand, slack: float = 0.0
) -> LPModel:
    """Prefix-sum rows ``sum_{t<=r} preferred_t >= sum_{t<=r} dominated_t - slack``.

    One row per tie-group boundary in decreasing-utility order; the full-length
    prefix is implied by the simplex equalities and omitted.
    """
    if not isinstance(rel, StochasticDominance):
        raise WrongVariant(f"stochastic-dominance rows need a StochasticDominance relation, got {type(rel).__name__}")
    order, bounds = sorted_outcome_order(rel)
    k = len(order)
    for r in bounds[:-1]:
        w = np.zeros(k)
        w[list(order[:r])] = 1.0
        terms: dict[int, float] = {}
        const = _linear(terms, preferred, w, 1.0) + _linear(terms, dominated, w, -1.0)
        m.add_constraint(terms, Relation.GE, -const - slack, name=f"sd_{len(m.constraints)}")
    return m


def add_equality(m: LPModel, p: Operand, q: Operand) -> LPModel:
    """``p = q`` coordinate-wise."""
    k = len(p) if not isinstance(p, Allocation) else len(p.probs)
    for c in range(k):
        e = np.zeros(k)
        e[c] = 1.0
        terms: dict[int, float] = {}
        const = _linear(terms, p, e, 1.0) + _linear(terms, q, e, -1.0)
        m.add_constraint(terms, Relation.EQ, -const, name=f"eq_{len(m.constraints)}")
    return m
