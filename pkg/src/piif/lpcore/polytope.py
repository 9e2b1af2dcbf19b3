"""The PIIF polytope: policy variables, surrogate allocations and their rows."""

from __future__ import annotations

from piif.core import Instance
from piif.lpcore.builders import (
    Operand,
    add_allocation_block,
    add_coordinate_constraints,
    add_equality,
    add_eu_preference_constraint,
    add_sd_preference_constraints,
    add_tv_constraint,
)
from piif.lpcore.model import LPModel
from piif.preferences import (
    BinaryRanking,
    ExpectedUtility,
    PreferenceRelation,
    StochasticDominance,
    TrivialReflexive,
    WrongVariant,
)


class UnsupportedPreference(WrongVariant):
    """The relation cannot be written as linear rows."""


def pi_block(i: int) -> str:
    return f"pi[{i}]"


def surrogate_block(i: int, j: int) -> str:
    return f"p[{i};{j}]"


def add_policy_blocks(m: LPModel, inst: Instance) -> list[list[int]]:
    return [add_allocation_block(m, pi_block(i), inst.n_outcomes) for i in range(inst.n_individuals)]


def add_preference_rows(
    m: LPModel, rel: PreferenceRelation, preferred: Operand, dominated: Operand, slack: float = 0.0
) -> LPModel:
    """``preferred`` weakly preferred to ``dominated`` under ``rel``.

    The trivial reflexive relation only relates an allocation to itself, so it
    becomes coordinate-wise equality.
    """
    if isinstance(rel, (ExpectedUtility, BinaryRanking)):
        return add_eu_preference_constraint(m, rel.utility(), preferred, dominated, slack)
    if isinstance(rel, StochasticDominance):
        return add_sd_preference_constraints(m, rel, preferred, dominated, slack)
    if isinstance(rel, TrivialReflexive):
        return add_equality(m, dominated, preferred)
    raise UnsupportedPreference(f"cannot linearize {rel!r}")


def build_piif_polytope(inst: Instance, presolve: bool = False) -> LPModel:
    """All policies satisfying PIIF, lifted with one surrogate per ordered pair.

    Variables: ``pi[i]`` for each individual, ``p[i;j]`` for each ordered pair
    and, on single-task instances, the TV slack block ``z[i;j]``. Multi-task
    instances bound each coordinate directly by its task metric.

    With ``presolve``, pairs at distance 0 (on every task) tie ``pi[i]`` to
    ``pi[j]`` directly, since the surrogate can only be ``pi[j]``, and pairs at
    distance at least 1 (on every task) are dropped, since ``pi[i]`` itself is
    then a valid surrogate. The projection onto the ``pi`` blocks is unchanged.
    """
    m = LPModel()
    pis = add_policy_blocks(m, inst)
    k = inst.n_outcomes
    for i, j in inst.pairs():
        bounds = [d(i, j) for d in inst.metrics]
        if presolve and all(b == 0.0 for b in bounds):
            add_preference_rows(m, inst.preferences[i], pis[i], pis[j])
            continue
        if presolve and all(b >= 1.0 for b in bounds):
            continue
        p = add_allocation_block(m, surrogate_block(i, j), k)
        if inst.is_multitask:
            add_coordinate_constraints(m, p, pis[j], bounds)
        else:
            add_tv_constraint(m, p, pis[j], bounds[0], slack_name=f"z[{i};{j}]")
        add_preference_rows(m, inst.preferences[i], pis[i], p)
    return m
