"""Named instance families: the motivating examples and the gap constructions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from piif.core import Allocation, Instance, Policy, ValidationError, make_instance
from piif.optimizer import Objective
from piif.preferences import ExpectedUtility, PreferenceRelation, TrivialReflexive


class IndivisibleSplit(ValidationError):
    """The population cannot be split evenly across outcomes."""


# ranking levels for the career example; any strictly decreasing triple gives the same verdicts
RANK_LEVELS = (1.0, 0.6, 0.2)

_CAREER_RANKINGS = {
    "i": "XYZ",
    "j": "YZX",
    "k": "ZXY",
    "l": "XYZ",
}


def career_expo(levels: tuple[float, float, float] = RANK_LEVELS) -> tuple[Instance, dict[str, Policy]]:
    """Four candidates and three interview slots X, Y, Z.

    ``i``, ``j`` and ``k`` are interchangeable; ``l`` is maximally far from the
    rest. Policies: everyone's top choice (``l`` to X, Y or Z) and constant
    uniform.
    """
    outcomes = ("X", "Y", "Z")
    utilities = []
    for ranking in _CAREER_RANKINGS.values():
        row = [0.0] * 3
        for level, label in zip(levels, ranking):
            row[outcomes.index(label)] = level
        utilities.append(row)
    d = np.zeros((4, 4))
    d[3, :3] = d[:3, 3] = 1.0
    inst = make_instance(
        utilities, d, outcome_labels=outcomes, individual_labels=list(_CAREER_RANKINGS), name="career-expo"
    )
    top = [outcomes.index(r[0]) for r in _CAREER_RANKINGS.values()]
    policies = {"top_choice": Policy.deterministic(top, 3)}
    for target in "YZ":
        top_l = [*top[:3], outcomes.index(target)]
        policies[f"top_choice_l_to_{target}"] = Policy.deterministic(top_l, 3)
    policies["uniform"] = Policy.constant(Allocation.uniform(3), 4)
    return inst, policies


def distinct_favorites(n: int) -> Instance:
    """``n`` identical-looking individuals (``d = 0``), each with a different favorite outcome."""
    if n < 2:
        raise ValidationError("distinct_favorites needs n >= 2")
    return make_instance(np.eye(n), np.zeros((n, n)), name=f"distinct-favorites-{n}")


def shared_favorites(n_individuals: int, n_outcomes: int) -> Instance:
    """Equal-sized blocks of individuals, each block favoring one outcome; ``d = 0``."""
    if n_outcomes < 1 or n_individuals < 1 or n_individuals % n_outcomes:
        raise IndivisibleSplit(f"{n_outcomes} outcomes do not split {n_individuals} individuals evenly")
    block = n_individuals // n_outcomes
    u = np.zeros((n_individuals, n_outcomes))
    u[np.arange(n_individuals), np.arange(n_individuals) // block] = 1.0
    return make_instance(
        u, np.zeros((n_individuals, n_individuals)), name=f"shared-favorites-{n_individuals}-{n_outcomes}"
    )


def mef_gap() -> tuple[Instance, dict[str, Policy]]:
    """Two individuals with mirrored utilities at distance 0.5."""
    inst = make_instance(
        [[1.0, 0.5], [0.5, 1.0]],
        [[0.0, 0.5], [0.5, 0.0]],
        outcome_labels=("p", "q"),
        individual_labels=("i", "j"),
        name="mef-gap",
    )
    policies = {
        "swap": Policy.deterministic([1, 0], 2),
        "welfare_max": Policy.deterministic([0, 1], 2),
        "constant_p": Policy.constant(Allocation.point_mass(0, 2), 2),
    }
    return inst, policies


def decision_maker_conflict(eps: float) -> tuple[Instance, Objective]:
    """Everyone wants ``p``; the decision-maker prefers ``q`` for S and ``r`` for T.

    Two representatives of half the population each, all at distance 0.
    """
    if not 0 < eps < 0.5:
        raise ValidationError(f"eps must lie in (0, 1/2), got {eps}")
    inst = make_instance(
        [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
        np.zeros((2, 2)),
        weights=[0.5, 0.5],
        outcome_labels=("p", "q", "r"),
        individual_labels=("S", "T"),
        name=f"decision-maker-conflict-{eps:g}",
    )
    f = np.array([[0.5 + eps, 1.0, 0.0], [0.5 + eps, 0.0, 1.0]])
    return inst, Objective.custom(f)


@dataclass(frozen=True)
class SeparationCase:
    """A policy on which IF and EF disagree, with the verdicts it should get."""

    name: str
    instance: Instance
    policy: Policy
    expect_if: bool
    expect_ef: bool


def if_ef_separation(d: float = 1.0) -> list[SeparationCase]:
    """Policies separating IF from EF.

    The first case pits opposed strict preferences against a single distance
    ``d``. The others fix a block metric (0 within S and within T, 1 across) and
    vary the preferences inside S.
    """
    cases = []
    opposed = make_instance(
        [[1.0, 0.0], [0.0, 1.0]],
        [[0.0, d], [d, 0.0]],
        outcome_labels=("p", "q"),
        individual_labels=("i", "j"),
        name=f"opposed-{d:g}",
    )
    if d >= 1.0:
        cases.append(SeparationCase("opposed_far", opposed, Policy.deterministic([1, 0], 2), True, False))
    else:
        cases.append(SeparationCase("opposed_near", opposed, Policy.deterministic([0, 1], 2), False, True))

    block = np.array([[0, 0, 1, 1], [0, 0, 1, 1], [1, 1, 0, 0], [1, 1, 0, 0]], dtype=float)
    labels = ("s1", "s2", "t1", "t2")

    def blocked(name: str, prefs: list[PreferenceRelation]) -> Instance:
        return make_instance(
            None, block, preferences=prefs, outcome_labels=("p", "q"), individual_labels=labels, name=name
        )

    indifferent = blocked("block-indifferent", [ExpectedUtility((0.5, 0.5))] * 4)
    cases.append(
        SeparationCase("block_indifferent", indifferent, Policy.deterministic([0, 1, 0, 0], 2), False, True)
    )
    strict = blocked(
        "block-strict", [ExpectedUtility((1.0, 0.0)), ExpectedUtility((0.5, 0.5)), *[ExpectedUtility((0.5, 0.5))] * 2]
    )
    cases.append(SeparationCase("block_strict", strict, Policy.deterministic([1, 1, 0, 0], 2), True, False))
    trivial = blocked("block-trivial", [TrivialReflexive(), *[ExpectedUtility((0.5, 0.5))] * 3])
    cases.append(SeparationCase("block_trivial", trivial, Policy.deterministic([0, 0, 1, 1], 2), True, False))
    return cases


def multitask_cascade(n: int, t: int) -> Instance:
    """Nested subpopulations competing over ``n`` ad campaigns.

    Individual ``l`` stands for a subpopulation of share ``t**-l`` (``l >= 1``;
    individual 0 takes the rest) and values campaign ``m`` at ``t**m`` when
    ``l >= m``, else 0. Task ``m`` separates individuals below ``m`` from the
    rest at distance 1, so only pairs that value it alike are constrained.
    """
    if n < 2 or t < 2:
        raise ValidationError(f"cascade needs n >= 2 and t >= 2, got n={n}, t={t}")
    shares = np.array([float(t) ** -l for l in range(n)])
    shares[0] = 1.0 - shares[1:].sum()
    u = np.array([[float(t) ** m if l >= m else 0.0 for m in range(n)] for l in range(n)])
    metrics = np.stack(
        [np.clip(np.abs(u[:, m, None] - u[None, :, m]) / float(t) ** m, 0.0, 1.0) for m in range(n)]
    )
    return make_instance(
        u,
        metrics,
        weights=shares,
        outcome_labels=[f"c{m}" for m in range(n)],
        individual_labels=[f"S{l}" for l in range(n)],
        name=f"cascade-{n}-{t}",
    )


def tech_and_toys() -> tuple[Instance, Policy]:
    """A parent and a non-parent, equally qualified for a tech job.

    The tech ad's metric says they are identical, the toy ad's says they are
    unrelated. Each sees the ad they prefer.
    """
    metrics = np.array([[[0.0, 0.0], [0.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]]])
    inst = make_instance(
        [[0.5, 1.0], [1.0, 0.5]],
        metrics,
        outcome_labels=("tech", "toys"),
        individual_labels=("parent", "non_parent"),
        name="tech-and-toys",
    )
    return inst, Policy.deterministic([1, 0], 2)


@dataclass(frozen=True)
class GeneratorSpec:
    name: str
    params: dict[str, float] = field(default_factory=dict)


def _first(result: Any) -> Instance:
    return result[0] if isinstance(result, tuple) else result


GENERATORS: dict[str, Callable[..., Any]] = {
    "career-expo": career_expo,
    "distinct-favorites": lambda n=4: distinct_favorites(int(n)),
    "shared-favorites": lambda n=12, k=4: shared_favorites(int(n), int(k)),
    "mef-gap": mef_gap,
    "decision-maker-conflict": lambda eps=0.1: decision_maker_conflict(float(eps)),
    "multitask-cascade": lambda n=3, t=100: multitask_cascade(int(n), int(t)),
    "tech-and-toys": tech_and_toys,
}


def generate(spec: GeneratorSpec) -> tuple[Instance, dict[str, Policy]]:
    """Build a registered family; returns the instance and any named policies."""
    if spec.name not in GENERATORS:
        raise ValidationError(f"unknown generator {spec.name!r}; choose from {sorted(GENERATORS)}")
    result = GENERATORS[spec.name](**spec.params)
    if spec.name == "tech-and-toys":
        return result[0], {"preferred": result[1]}
    if isinstance(result, tuple) and isinstance(result[1], dict):
        return result
    return _first(result), {}
