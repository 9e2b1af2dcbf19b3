"""Linear objectives over the IF, EF and PIIF policy polytopes."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from piif import audit as _audit
from piif.core import TOL, Allocation, Instance, NoUtility, Policy, ValidationError, reported_welfare, tv_distance
from piif.lpcore import (
    LPModel,
    Sense,
    Status,
    add_allocation_block,
    add_coordinate_constraints,
    add_equality,
    add_policy_blocks,
    add_preference_rows,
    add_tv_constraint,
    build_piif_polytope,
    pi_block,
    solve,
)
from piif.preferences import Comparison, weakly_prefers


class TooLarge(ValueError):
    """Grid enumeration requested beyond its supported size."""


class Family(enum.Enum):
    UNCONSTRAINED = "unconstrained"
    IF = "if"
    EF = "ef"
    PIIF = "piif"
    MT_IF = "mt-if"
    MT_PIIF = "mt-piif"
    CONSTANT = "constant"


class ObjectiveKind(enum.Enum):
    SOCIAL_WELFARE = "social_welfare"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class Objective:
    """``sum_i sum_c weights[i, c] * pi(i)_c``, maximized or minimized."""

    kind: ObjectiveKind
    weights: np.ndarray
    sense: Sense = Sense.MAXIMIZE

    @classmethod
    def social_welfare(cls, inst: Instance) -> Objective:
        return cls(ObjectiveKind.SOCIAL_WELFARE, inst.weights[:, None] * inst.utility_matrix())

    @classmethod
    def custom(cls, weights, sense: Sense | str = Sense.MAXIMIZE) -> Objective:
        return cls(ObjectiveKind.CUSTOM, np.asarray(weights, dtype=float), Sense(sense))

    def value(self, pi: Policy) -> float:
        return float(np.sum(self.weights * pi.matrix()))

    def check(self, inst: Instance) -> None:
        if self.weights.shape != (inst.n_individuals, inst.n_outcomes):
            raise ValidationError(
                f"objective has shape {self.weights.shape}, instance needs {(inst.n_individuals, inst.n_outcomes)}"
            )


@dataclass(frozen=True)
class OptResult:
    policy: Policy | None
    objective_value: float
    welfare: float | None
    status: Status
    family: Family

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": self.family.value,
            "status": self.status.value,
            "objective_value": self.objective_value,
            "welfare": self.welfare,
            "policy": None if self.policy is None else {"alloc": {str(i): list(a.probs) for i, a in self.policy.alloc.items()}},
        }


def _welfare_or_none(inst: Instance, pi: Policy) -> float | None:
    try:
        return reported_welfare(inst, pi)
    except NoUtility:
        return None


def _require_single(inst: Instance, family: Family) -> None:
    if inst.is_multitask:
        raise ValidationError(f"family {family.value} needs a single-task instance; use the mt- variant")


def _require_multi(inst: Instance, family: Family) -> None:
    if not inst.is_multitask:
        raise ValidationError(f"family {family.value} needs one metric per outcome")


def build_family_model(inst: Instance, family: Family, presolve: bool = True) -> LPModel:
    """The policy polytope of ``family`` with blocks ``pi[i]`` for every individual.

    ``presolve`` applies exact reductions for pairs at distance 0 or at least 1:
    see :func:`build_piif_polytope`; under IF such pairs become equalities or
    are dropped.
    """
    n = inst.n_individuals
    if family in (Family.PIIF, Family.MT_PIIF):
        (_require_single if family is Family.PIIF else _require_multi)(inst, family)
        return build_piif_polytope(inst, presolve=presolve)
    m = LPModel()
    pis = add_policy_blocks(m, inst)
    if family is Family.IF:
        _require_single(inst, family)
        for i, j in itertools.combinations(range(n), 2):
            d = inst.metric(i, j)
            if presolve and d == 0.0:
                add_equality(m, pis[i], pis[j])
            elif not (presolve and d >= 1.0):
                add_tv_constraint(m, pis[i], pis[j], d, slack_name=f"z[{i};{j}]")
    elif family is Family.MT_IF:
        _require_multi(inst, family)
        for i, j in itertools.combinations(range(n), 2):
            add_coordinate_constraints(m, pis[i], pis[j], [d(i, j) for d in inst.metrics])
    elif family is Family.EF:
        for i, j in inst.pairs():
            add_preference_rows(m, inst.preferences[i], pis[i], pis[j])
    elif family is not Family.UNCONSTRAINED:
        raise ValueError(f"no polytope for family {family.value}")
    return m


def decode_policy(model: LPModel, values: np.ndarray, n_individuals: int) -> Policy:
    return Policy({i: Allocation.from_solver(values[model.blocks[pi_block(i)]]) for i in range(n_individuals)})


def optimize(inst: Instance, obj: Objective, family: Family | str, presolve: bool = True) -> OptResult:
    """Optimize ``obj`` over the policies of ``family``.

    Every family contains a constant policy or the favorite-outcome policy, so
    infeasibility signals a bug and raises ``RuntimeError``; an exhausted
    iteration budget is returned as a status.
    """
    family = Family(family)
    if family is Family.CONSTANT:
        return randomize_then_classify_baseline(inst, obj)
    obj.check(inst)
    m = build_family_model(inst, family, presolve)
    terms: dict[int, float] = {}
    for i in range(inst.n_individuals):
        for v, w in zip(m.blocks[pi_block(i)], obj.weights[i]):
            if w:
                terms[v] = float(w)
    m.set_objective(terms, obj.sense)
    sol = solve(m)
    if sol.status is Status.INFEASIBLE:
        raise RuntimeError(f"{family.value} polytope reported infeasible; it always contains a feasible policy")
    if not sol.ok:
        return OptResult(None, math.nan, None, sol.status, family)
    pi = decode_policy(m, sol.values, inst.n_individuals)
    return OptResult(pi, obj.value(pi), _welfare_or_none(inst, pi), sol.status, family)


def randomize_then_classify_baseline(inst: Instance, obj: Objective) -> OptResult:
    """Best constant policy: one allocation shared by every individual.

    Constant policies satisfy IF and multi-task IF under any metric.
    """
    if obj.sense is not Sense.MAXIMIZE:
        raise ValueError("the constant-policy baseline is defined for maximization")
    obj.check(inst)
    m = LPModel()
    x = add_allocation_block(m, "x", inst.n_outcomes)
    column = obj.weights.sum(axis=0)
    m.set_objective({v: float(a) for v, a in zip(x, column)}, Sense.MAXIMIZE)
    sol = solve(m)
    if not sol.ok:
        raise RuntimeError(f"constant-policy LP ended with status {sol.status.value}")
    pi = Policy.constant(Allocation.from_solver(sol.values[x]), inst.n_individuals)
    return OptResult(pi, obj.value(pi), _welfare_or_none(inst, pi), sol.status, Family.CONSTANT)


# -- brute-force oracle -------------------------------------------------------


def simplex_grid(n_outcomes: int, g: int) -> np.ndarray:
    """All allocations whose entries are multiples of ``1/g``."""
    points = [
        np.diff([-1, *bars, g + n_outcomes - 1]) - 1
        for bars in itertools.combinations(range(g + n_outcomes - 1), n_outcomes - 1)
    ]
    return np.array(points, dtype=float).reshape(-1, n_outcomes) / g


def _pair_table(
    inst: Instance, family: Family, grid: list[Allocation], i: int, j: int, tol: float
) -> np.ndarray:
    """``table[a, b]``: does the pair ``(i, j)`` pass when ``pi(i) = grid[a]``, ``pi(j) = grid[b]``?"""
    G = len(grid)
    table = np.ones((G, G), dtype=bool)
    if family is Family.UNCONSTRAINED:
        return table
    if family is Family.CONSTANT:
        return np.eye(G, dtype=bool)
    if family is Family.IF:
        d = inst.metric(i, j)
        for a, b in itertools.product(range(G), repeat=2):
            table[a, b] = tv_distance(grid[a], grid[b]) <= d + tol
        return table
    if family is Family.MT_IF:
        bounds = np.array([m(i, j) for m in inst.metrics])
        arr = np.array([p.probs for p in grid])
        return np.all(np.abs(arr[:, None, :] - arr[None, :, :]) <= bounds + tol, axis=2)
    if family is Family.EF:
        rel = inst.preferences[i]
        for a, b in itertools.product(range(G), repeat=2):
            table[a, b] = weakly_prefers(rel, grid[a], grid[b], tol) is Comparison.WEAKLY_PREFERRED
        return table
    if family in (Family.PIIF, Family.MT_PIIF):
        for a, b in itertools.product(range(G), repeat=2):
            pair_policy = Policy({i: grid[a], j: grid[b]})
            table[a, b] = _audit.piif_pair(inst, pair_policy, i, j, tol).satisfied
        return table
    raise ValueError(f"no grid oracle for family {family.value}")


def grid_optimum(inst: Instance, obj: Objective, family: Family | str, g: int, tol: float = TOL) -> OptResult:
    """Best policy whose allocations all lie on the ``1/g`` simplex grid.

    Each ordered pair's fairness condition is tabulated once over grid pairs,
    then every grid policy is scored. Test oracle only: limited to
    ``|X| <= 4``, ``|C| <= 4``, ``g <= 6``.
    """
    family = Family(family)
    n, k = inst.n_individuals, inst.n_outcomes
    if n > 4 or k > 4 or g > 6 or g < 1:
        raise TooLarge(f"grid oracle supports |X|<=4, |C|<=4, 1<=g<=6; got {n}, {k}, {g}")
    obj.check(inst)
    G_arr = simplex_grid(k, g)
    grid = [Allocation(row) for row in G_arr]
    G = len(grid)
    tables = {(i, j): _pair_table(inst, family, grid, i, j, tol) for i, j in inst.pairs()}
    scores = G_arr @ obj.weights.T  # (G, n)
    sign = 1.0 if obj.sense is Sense.MAXIMIZE else -1.0

    tail = min(n, 3)
    head = n - tail
    best_val, best_idx = -math.inf, None
    for prefix in itertools.product(range(G), repeat=head):
        ok = np.ones((G,) * tail, dtype=bool)
        value = np.zeros((G,) * tail)
        base = sum(scores[prefix[h], h] for h in range(head))
        for h1 in range(head):
            for h2 in range(head):
                if h1 != h2 and not tables[(h1, h2)][prefix[h1], prefix[h2]]:
                    ok[...] = False
        for t in range(tail):
            i = head + t
            shape = [1] * tail
            shape[t] = G
            value = value + scores[:, i].reshape(shape)
            for h in range(head):
                ok &= tables[(i, h)][:, prefix[h]].reshape(shape)
                ok &= tables[(h, i)][prefix[h], :].reshape(shape)
        for t1, t2 in itertools.permutations(range(tail), 2):
            shape = [1] * tail
            shape[t1] = G
            shape[t2] = G
            tab = tables[(head + t1, head + t2)]
            ok &= (tab if t1 < t2 else tab.T).reshape(shape)
        if not ok.any():
            continue
        masked = np.where(ok, sign * (value + base), -math.inf)
        flat = int(np.argmax(masked))
        if masked.flat[flat] > best_val:
            best_val = float(masked.flat[flat])
            best_idx = (*prefix, *np.unravel_index(flat, ok.shape))
    if best_idx is None:
        raise RuntimeError("no grid policy passed the audit; the constant grid policies always should")
    pi = Policy({i: grid[int(a)] for i, a in enumerate(best_idx)})
    return OptResult(pi, obj.value(pi), _welfare_or_none(inst, pi), Status.OPTIMAL, family)


# -- welfare comparison -------------------------------------------------------


@dataclass(frozen=True)
class WelfareComparison:
    w_unconstrained: float
    w_if: float
    w_piif: float
    ratio: float

    def to_dict(self) -> dict[str, float]:
        return {
            "w_unconstrained": self.w_unconstrained,
            "w_if": self.w_if,
            "w_piif": self.w_piif,
            "ratio": self.ratio,
        }


def welfare_ratio(inst: Instance, tol: float = 1e-6) -> WelfareComparison:
    """Best welfare with no constraint, under IF and under PIIF.

    Multi-task instances use the multi-task families. PIIF always reaches the
    unconstrained optimum; a mismatch raises ``RuntimeError``. The ratio is
    ``inf`` when the IF optimum is zero.
    """
    obj = Objective.social_welfare(inst)
    fam_if, fam_piif = (Family.MT_IF, Family.MT_PIIF) if inst.is_multitask else (Family.IF, Family.PIIF)
    results: dict[Family, OptResult] = {}
    for fam in (Family.UNCONSTRAINED, fam_if, fam_piif):
        res = optimize(inst, obj, fam)
        if not res.status is Status.OPTIMAL:
            raise RuntimeError(f"{fam.value} optimization ended with status {res.status.value}")
        results[fam] = res
    w_u, w_if, w_piif = (results[f].welfare for f in (Family.UNCONSTRAINED, fam_if, fam_piif))
    if abs(w_piif - w_u) > tol * max(1.0, abs(w_u)):
        raise RuntimeError(f"PIIF welfare {w_piif} differs from the unconstrained optimum {w_u}")
    ratio = math.inf if w_if == 0 else w_u / w_if
    return WelfareComparison(w_u, w_if, w_piif, ratio)


Checker = Callable[[Instance, Policy], "_audit.AuditReport"]

FAMILY_AUDITS: dict[Family, Callable[..., Any]] = {
    Family.IF: _audit.audit_if,
    Family.EF: _audit.audit_ef,
    Family.PIIF: _audit.audit_piif,
    Family.MT_IF: _audit.audit_mt_if,
    Family.MT_PIIF: _audit.audit_mt_piif,
}


def check_result(inst: Instance, result: OptResult, tol: float = TOL) -> bool:
    """Re-audit an optimizer result against its own family (trivially true when unconstrained)."""
    if result.policy is None:
        return False
    if result.family is Family.CONSTANT:
        first = result.policy[0]
        return all(a.isclose(first, tol) for a in result.policy.alloc.values())
    audit_fn = FAMILY_AUDITS.get(result.family)
    return True if audit_fn is None else audit_fn(inst, result.policy, tol=tol).overall
