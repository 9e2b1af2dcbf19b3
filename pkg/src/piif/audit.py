"""Membership tests for IF, EF, PIIF, MEF and their multi-task variants.

Every audit walks all ordered pairs ``(i, j)`` with ``i != j`` and records a
:class:`PairVerdict`. PIIF verdicts carry the surrogate allocation that
certifies the pair; failed verdicts carry a :class:`Violation` with the two
sides of the inequality that broke.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Callable, Literal

import numpy as np

from piif.core import TOL, Allocation, Instance, NoUtility, Policy, ValidationError, tv_distance
from piif.lpcore import (
    LPModel,
    Relation,
    add_allocation_block,
    add_coordinate_constraints,
    add_preference_rows,
    add_tv_constraint,
    solve,
)
from piif.preferences import (
    BinaryRanking,
    Comparison,
    ExpectedUtility,
    StochasticDominance,
    TrivialReflexive,
    sorted_outcome_order,
    survival_gaps,
    weakly_prefers,
)


class MultiTaskInstance(ValidationError):
    """A single-task audit was asked to check a multi-task instance."""


class SingleTaskInstance(ValidationError):
    """A multi-task audit was asked to check a single-task instance."""


class NotNormalized(ValidationError):
    """MEF compares utilities with distances; utilities must lie in [0, 1]."""


class Notion(enum.Enum):
    IF = "if"
    EF = "ef"
    PIIF = "piif"
    MEF = "mef"
    MT_IF = "mt-if"
    MT_PIIF = "mt-piif"


@dataclass(frozen=True)
class Violation:
    lhs: float
    rhs: float
    kind: str


@dataclass(frozen=True)
class PairVerdict:
    i: int
    j: int
    satisfied: bool
    witness: Allocation | None = None
    violation: Violation | None = None

    def __post_init__(self) -> None:
        if self.satisfied == (self.violation is not None):
            raise ValueError("a pair verdict is either satisfied or carries a violation")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"i": self.i, "j": self.j, "satisfied": self.satisfied}
        if self.witness is not None:
            out["witness"] = list(self.witness.probs)
        if self.violation is not None:
            out["violation"] = {"lhs": self.violation.lhs, "rhs": self.violation.rhs, "kind": self.violation.kind}
        return out


@dataclass(frozen=True)
class AuditReport:
    notion: Notion
    verdicts: tuple[PairVerdict, ...]

    @property
    def overall(self) -> bool:
        return all(v.satisfied for v in self.verdicts)

    def __bool__(self) -> bool:
        return self.overall

    @property
    def violations(self) -> list[PairVerdict]:
        return [v for v in self.verdicts if not v.satisfied]

    def verdict(self, i: int, j: int) -> PairVerdict:
        for v in self.verdicts:
            if (v.i, v.j) == (i, j):
                return v
        raise KeyError((i, j))

    def to_dict(self) -> dict[str, Any]:
        return {
            "notion": self.notion.value,
            "overall": self.overall,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }


PairCheck = Callable[[Instance, Policy, int, int, float], PairVerdict]


def _report(notion: Notion, inst: Instance, pi: Policy, check: PairCheck, tol: float) -> AuditReport:
    if len(pi) != inst.n_individuals:
        raise ValidationError(f"policy covers {len(pi)} individuals, instance has {inst.n_individuals}")
    verdicts = tuple(check(inst, pi, i, j, tol) for i, j in inst.pairs())
    return AuditReport(notion, verdicts)


def _single_task(inst: Instance) -> None:
    if inst.is_multitask:
        raise MultiTaskInstance("use the multi-task audit for instances with one metric per outcome")


def _multi_task(inst: Instance) -> None:
    if not inst.is_multitask:
        raise SingleTaskInstance("multi-task audits need one metric per outcome")


def _fail(i: int, j: int, lhs: float, rhs: float, kind: str) -> PairVerdict:
    return PairVerdict(i, j, False, violation=Violation(float(lhs), float(rhs), kind))


# -- IF -----------------------------------------------------------------------


def if_pair(inst: Instance, pi: Policy, i: int, j: int, tol: float = TOL) -> PairVerdict:
    dist, bound = tv_distance(pi[i], pi[j]), inst.metric(i, j)
    if dist <= bound + tol:
        return PairVerdict(i, j, True)
    return _fail(i, j, dist, bound, "lipschitz")


def audit_if(inst: Instance, pi: Policy, tol: float = TOL) -> AuditReport:
    _single_task(inst)
    return _report(Notion.IF, inst, pi, if_pair, tol)


def mt_if_pair(inst: Instance, pi: Policy, i: int, j: int, tol: float = TOL) -> PairVerdict:
    gaps = np.abs(pi[i].as_array() - pi[j].as_array())
    bounds = np.array([d(i, j) for d in inst.metrics])
    excess = gaps - bounds
    c = int(np.argmax(excess))
    if excess[c] <= tol:
        return PairVerdict(i, j, True)
    return _fail(i, j, gaps[c], bounds[c], f"lipschitz[c={c}]")


def audit_mt_if(inst: Instance, pi: Policy, tol: float = TOL) -> AuditReport:
    _multi_task(inst)
    return _report(Notion.MT_IF, inst, pi, mt_if_pair, tol)


# -- EF -----------------------------------------------------------------------


def ef_pair(inst: Instance, pi: Policy, i: int, j: int, tol: float = TOL) -> PairVerdict:
    rel = inst.preferences[i]
    verdict = weakly_prefers(rel, pi[i], pi[j], tol)
    if verdict is Comparison.WEAKLY_PREFERRED:
        return PairVerdict(i, j, True)
    kind = f"envy:{verdict.value}"
    if isinstance(rel, StochasticDominance):
        return _fail(i, j, survival_gaps(rel, pi[i], pi[j]).min(), -tol, kind)
    if isinstance(rel, TrivialReflexive):
        return _fail(i, j, tv_distance(pi[i], pi[j]), 0.0, kind)
    u = np.asarray(rel.utility())
    return _fail(i, j, u @ pi[i].as_array(), u @ pi[j].as_array(), kind)


def audit_ef(inst: Instance, pi: Policy, tol: float = TOL) -> AuditReport:
    return _report(Notion.EF, inst, pi, ef_pair, tol)


# -- PIIF ---------------------------------------------------------------------


def _greedy_ball_minimizer(u: np.ndarray, q: np.ndarray, r: float) -> np.ndarray:
    p = q.astype(float).copy()
    sink = int(np.argmin(u))
    remaining = float(r)
    for c in sorted(range(len(u)), key=lambda c: (-u[c], c)):
        if remaining <= 0 or u[c] <= u[sink]:
            break
        moved = min(p[c], remaining)
        p[c] -= moved
        p[sink] += moved
        remaining -= moved
    return p


def min_utility_in_ball(u, q: Allocation, r: float) -> float:
    """Smallest ``<u, p>`` over allocations ``p`` with ``TV(p, q) <= r``.

    Greedy: move up to ``r`` of ``q``'s mass, highest-utility outcomes first,
    onto the lowest-utility outcome.
    """
    if not 0 <= r <= 1:
        raise ValueError(f"radius must lie in [0, 1], got {r}")
    u = np.asarray(u, dtype=float)
    return float(u @ _greedy_ball_minimizer(u, q.as_array(), r))


def surrogate_model(
    inst: Instance, pi: Policy, i: int, j: int, slack: float = 0.0
) -> tuple[LPModel, list[int]]:
    """Feasibility LP over the surrogate ``p`` for the ordered pair ``(i, j)``.

    ``p`` must lie within the metric of ``pi[j]`` (TV ball for one task,
    per-coordinate box for several) and be weakly dispreferred to ``pi[i]``.
    """
    m = LPModel()
    p = add_allocation_block(m, f"p[{i};{j}]", inst.n_outcomes)
    if inst.is_multitask:
        add_coordinate_constraints(m, p, pi[j], [d(i, j) for d in inst.metrics])
    else:
        add_tv_constraint(m, p, pi[j], inst.metric(i, j), slack_name=f"z[{i};{j}]")
    add_preference_rows(m, inst.preferences[i], pi[i], p, slack=slack)
    return m, p


def _min_preference_gap(inst: Instance, pi: Policy, i: int, j: int) -> float:
    """Smallest uniform slack on the preference rows that makes the surrogate LP feasible."""
    m = LPModel()
    p = add_allocation_block(m, "p", inst.n_outcomes)
    if inst.is_multitask:
        add_coordinate_constraints(m, p, pi[j], [d(i, j) for d in inst.metrics])
    else:
        add_tv_constraint(m, p, pi[j], inst.metric(i, j), slack_name="z")
    s = m.add_var("s", lower=-math.inf)
    rel = inst.preferences[i]
    own = pi[i].as_array()
    if isinstance(rel, StochasticDominance):
        order, bounds = sorted_outcome_order(rel)
        rows = [list(order[:r]) for r in bounds[:-1]]
        weights = [np.isin(np.arange(inst.n_outcomes), row).astype(float) for row in rows]
    else:
        weights = [np.asarray(rel.utility(), dtype=float)]
    for w in weights:
        # <w, own> - <w, p> >= -s
        m.add_constraint({**{v: -float(a) for v, a in zip(p, w) if a}, s: 1.0}, Relation.GE, -float(w @ own))
    m.set_objective({s: 1.0})
    sol = solve(m)
    return sol.objective_value if sol.ok else math.inf


def piif_pair(
    inst: Instance,
    pi: Policy,
    i: int,
    j: int,
    tol: float = TOL,
    method: Literal["auto", "closed_form", "lp"] = "auto",
) -> PairVerdict:
    """PIIF check for one ordered pair, with the surrogate as witness.

    Expected-utility relations use the closed form by default; stochastic
    dominance always goes through the surrogate LP. The trivial relation only
    admits ``pi[i]`` itself as surrogate, which reduces the pair to IF.
    """
    rel = inst.preferences[i]
    if isinstance(rel, TrivialReflexive):
        if inst.is_multitask:
            verdict = mt_if_pair(inst, pi, i, j, tol)
        else:
            verdict = if_pair(inst, pi, i, j, tol)
        if verdict.satisfied:
            return PairVerdict(i, j, True, witness=pi[i])
        return _fail(i, j, verdict.violation.lhs, verdict.violation.rhs, "no-surrogate:" + verdict.violation.kind)

    closed_form = isinstance(rel, (ExpectedUtility, BinaryRanking)) and not inst.is_multitask
    if method == "closed_form" and not closed_form:
        raise ValueError("the closed form covers expected-utility relations on single-task instances only")
    if closed_form and method != "lp":
        u = np.asarray(rel.utility(), dtype=float)
        p = _greedy_ball_minimizer(u, pi[j].as_array(), inst.metric(i, j))
        lowest, own = float(u @ p), float(u @ pi[i].as_array())
        if lowest <= own + tol:
            return PairVerdict(i, j, True, witness=Allocation.from_solver(p))
        return _fail(i, j, lowest, own, "no-surrogate")

    # half the tolerance in the LP so a returned witness passes the comparison at full tolerance
    m, p = surrogate_model(inst, pi, i, j, slack=0.5 * tol)
    sol = solve(m)
    if sol.ok:
        return PairVerdict(i, j, True, witness=Allocation.from_solver(sol.values[p]))
    return _fail(i, j, _min_preference_gap(inst, pi, i, j), 0.5 * tol, "no-surrogate")


def audit_piif(inst: Instance, pi: Policy, tol: float = TOL, method: str = "auto") -> AuditReport:
    _single_task(inst)
    return _report(Notion.PIIF, inst, pi, lambda *a: piif_pair(*a, method=method), tol)


def audit_mt_piif(inst: Instance, pi: Policy, tol: float = TOL) -> AuditReport:
    _multi_task(inst)
    return _report(Notion.MT_PIIF, inst, pi, piif_pair, tol)


# -- MEF ----------------------------------------------------------------------


def mef_pair(inst: Instance, pi: Policy, i: int, j: int, tol: float = TOL) -> PairVerdict:
    u = np.asarray(inst.preferences[i].utility(), dtype=float)
    if u.min() < 0 or u.max() > 1:
        raise NotNormalized(f"individual {i}: utilities must lie in [0, 1]; run normalize_utilities first")
    own, other = float(u @ pi[i].as_array()), float(u @ pi[j].as_array())
    rhs = other - inst.metric(i, j)
    if own >= rhs - tol:
        return PairVerdict(i, j, True)
    return _fail(i, j, own, rhs, "metric-envy")


def audit_mef(inst: Instance, pi: Policy, tol: float = TOL) -> AuditReport:
    _single_task(inst)
    for i, rel in inst.preferences.items():
        if isinstance(rel, TrivialReflexive):
            raise NoUtility(f"individual {i} has no utility representation")
    return _report(Notion.MEF, inst, pi, mef_pair, tol)


AUDITS: dict[Notion, Callable[..., AuditReport]] = {
    Notion.IF: audit_if,
    Notion.EF: audit_ef,
    Notion.PIIF: audit_piif,
    Notion.MEF: audit_mef,
    Notion.MT_IF: audit_mt_if,
    Notion.MT_PIIF: audit_mt_piif,
}


def audit(inst: Instance, pi: Policy, notion: Notion | str, tol: float = TOL) -> AuditReport:
    return AUDITS[Notion(notion)](inst, pi, tol=tol)
