"""Statistical parity and its preference-informed relaxation for binary classifiers.

Label ``-1`` is outcome 0 and label ``+1`` is outcome 1 of a two-outcome
instance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from piif.core import Allocation, Instance, ValidationError, make_instance
from piif.preferences import BinaryRanking, Comparison, weakly_prefers


# absorbs rounding in weighted rates such as 1/3 - 1/2 against eps = 1/6
PARITY_SLACK = 1e-12


class EmptyGroup(ValidationError):
    """The protected group or its complement is empty."""


def label_to_outcome(label: int) -> int:
    return 1 if label == 1 else 0


@dataclass(frozen=True)
class BinaryClassifier:
    labels: Mapping[int, int]

    def __post_init__(self) -> None:
        bad = {i: v for i, v in self.labels.items() if v not in (1, -1)}
        if bad:
            raise ValidationError(f"labels must be +1 or -1, got {bad}")
        object.__setattr__(self, "labels", dict(sorted(self.labels.items())))

    @classmethod
    def from_sequence(cls, labels: Sequence[int]) -> BinaryClassifier:
        return cls({i: int(v) for i, v in enumerate(labels)})

    def __getitem__(self, i: int) -> int:
        return self.labels[i]

    def check(self, inst: Instance) -> None:
        if set(self.labels) != set(range(inst.n_individuals)):
            raise ValidationError("classifier must label every individual of the instance")
        if inst.n_outcomes != 2:
            raise ValidationError("binary classifiers need a two-outcome instance")

    def to_dict(self) -> dict[str, Any]:
        return {"labels": {str(i): v for i, v in self.labels.items()}}


@dataclass(frozen=True)
class GroupSpec:
    """A protected group ``S``; its complement ``T`` is taken within the instance."""

    S: frozenset[int]

    def __init__(self, S: Iterable[int]):
        object.__setattr__(self, "S", frozenset(int(i) for i in S))

    def split(self, inst: Instance) -> tuple[list[int], list[int]]:
        ids = range(inst.n_individuals)
        if not self.S <= set(ids):
            raise ValidationError(f"group members {sorted(self.S - set(ids))} are not individuals")
        s = [i for i in ids if i in self.S]
        t = [i for i in ids if i not in self.S]
        if not s or not t:
            raise EmptyGroup("both the group and its complement must be nonempty")
        return s, t

    def to_dict(self) -> dict[str, Any]:
        return {"S": sorted(self.S)}


def default_eps(inst: Instance, g: GroupSpec) -> float:
    """Smallest rounding slack that finite groups generally need: ``1 / (2 min(|S|, |T|))``."""
    s, t = g.split(inst)
    return 1.0 / (2 * min(len(s), len(t)))


def positive_rate(inst: Instance, h: BinaryClassifier, members: Sequence[int]) -> float:
    w = inst.weights[list(members)]
    positive = np.array([h[i] == 1 for i in members], dtype=float)
    return float(w @ positive / w.sum())


@dataclass(frozen=True)
class SPReport:
    satisfied: bool
    rate_s: float
    rate_t: float
    eps: float

    def __bool__(self) -> bool:
        return self.satisfied


def audit_sp(inst: Instance, h: BinaryClassifier, g: GroupSpec, eps: float | None = None) -> SPReport:
    """Weighted positive rates of ``S`` and ``T`` differ by at most ``eps``."""
    h.check(inst)
    eps = default_eps(inst, g) if eps is None else float(eps)
    if eps < 0:
        raise ValidationError("eps must be nonnegative")
    s, t = g.split(inst)
    rate_s, rate_t = positive_rate(inst, h, s), positive_rate(inst, h, t)
    return SPReport(abs(rate_s - rate_t) <= eps + PARITY_SLACK, rate_s, rate_t, eps)


@dataclass(frozen=True)
class PISPReport:
    satisfied: bool
    witness: BinaryClassifier | None
    rate_t: float
    eps: float

    def __bool__(self) -> bool:
        return self.satisfied


def may_relabel(inst: Instance, h: BinaryClassifier, i: int) -> bool:
    """Does ``i`` weakly prefer its own label to the opposite one?"""
    own = Allocation.point_mass(label_to_outcome(h[i]), 2)
    other = Allocation.point_mass(label_to_outcome(-h[i]), 2)
    return weakly_prefers(inst.preferences[i], own, other) is Comparison.WEAKLY_PREFERRED


def _reachable_positive_weights(weights: Sequence[float]) -> dict[float, tuple[int, ...]]:
    """Every subset weight of ``weights`` mapped to one subset achieving it."""
    reach: dict[float, tuple[int, ...]] = {0.0: ()}
    for idx, w in enumerate(weights):
        for total, subset in list(reach.items()):
            key = round(total + w, 12)
            reach.setdefault(key, (*subset, idx))
    return reach


def audit_pisp(inst: Instance, h: BinaryClassifier, g: GroupSpec, eps: float | None = None) -> PISPReport:
    """Search for an alternative classifier ``h'`` that reaches parity.

    ``h'`` keeps every label in ``T`` and may change the label of ``i`` in ``S``
    only when ``i`` weakly prefers ``h(i)`` to the change. ``h'`` must satisfy
    statistical parity at ``eps``; the one closest to parity is returned as witness.
    """
    h.check(inst)
    eps = default_eps(inst, g) if eps is None else float(eps)
    if eps < 0:
        raise ValidationError("eps must be nonnegative")
    s, t = g.split(inst)
    rate_t = positive_rate(inst, h, t)
    weights = inst.weights
    total_s = float(weights[s].sum())
    flexible = [i for i in s if may_relabel(inst, h, i)]
    fixed_positive = float(sum(weights[i] for i in s if i not in flexible and h[i] == 1))

    best: tuple[float, tuple[int, ...]] | None = None
    for extra, subset in sorted(_reachable_positive_weights([weights[i] for i in flexible]).items()):
        gap = abs((fixed_positive + extra) / total_s - rate_t)
        if gap <= eps + PARITY_SLACK and (best is None or gap < best[0]):
            best = (gap, subset)
    if best is None:
        return PISPReport(False, None, rate_t, eps)
    positive = {flexible[idx] for idx in best[1]}
    labels = dict(h.labels)
    for i in flexible:
        labels[i] = 1 if i in positive else -1
    return PISPReport(True, BinaryClassifier(labels), rate_t, eps)


def check_pisp_witness(
    inst: Instance, h: BinaryClassifier, g: GroupSpec, witness: BinaryClassifier, eps: float
) -> bool:
    """The three defining conditions of a preference-informed parity witness."""
    s, t = g.split(inst)
    if any(witness[j] != h[j] for j in t):
        return False
    if any(witness[i] != h[i] and not may_relabel(inst, h, i) for i in s):
        return False
    return audit_sp(inst, witness, g, eps).satisfied


@dataclass(frozen=True)
class PispExample:
    instance: Instance
    group: GroupSpec
    respects_preferences: BinaryClassifier
    excludes_group: BinaryClassifier


def pisp_example(n_s: int = 4, n_s_prime: int = 2, n_t: int = 4) -> PispExample:
    """Everyone prefers +1 except a subgroup ``S'`` of ``S``.

    ``respects_preferences`` gives ``S'`` its preferred -1 and everyone else +1;
    ``excludes_group`` gives +1 to ``T`` only.
    """
    if not 0 <= n_s_prime <= n_s or n_s < 1 or n_t < 1:
        raise ValidationError("need 0 <= |S'| <= |S| and nonempty S, T")
    n = n_s + n_t
    prefs = [BinaryRanking(0) if i < n_s_prime else BinaryRanking(1) for i in range(n)]
    inst = make_instance(
        None,
        np.zeros((n, n)),
        preferences=prefs,
        outcome_labels=("-1", "+1"),
        individual_labels=[f"s{i}" for i in range(n_s)] + [f"t{j}" for j in range(n_t)],
        name=f"pisp-{n_s}-{n_s_prime}-{n_t}",
    )
    group = GroupSpec(range(n_s))
    respects = BinaryClassifier.from_sequence([-1 if i < n_s_prime else 1 for i in range(n)])
    excludes = BinaryClassifier.from_sequence([-1 if i < n_s else 1 for i in range(n)])
    return PispExample(inst, group, respects, excludes)
