"""Dense two-phase revised simplex with Bland's anti-cycling rule.

The solver is deterministic: the same model always yields the same basis and
the same solution vector. Models are small (a few hundred rows), so the basis
inverse is simply recomputed densely after every pivot.
"""

from __future__ import annotations

import math
from typing import Callable, Protocol

import numpy as np

from piif.core import TOL
from piif.lpcore.model import LPModel, LPSolution, Relation, Sense, Status

# rows are equilibrated to unit max-norm, so these are relative tolerances
PIVOT_EPS = 1e-7
COST_EPS = 1e-9
RATIO_EPS = 1e-12
PIVOT_SHARE = 1e-2
REFACTOR_EVERY = 64
ZERO_EPS = 1e-9
# residual of the phase-one objective above which the model is declared infeasible
PHASE1_EPS = 1e-9


class Solver(Protocol):
    def __call__(self, model: LPModel) -> LPSolution: ...


class _StandardForm:
    """``min c.y  s.t.  A y (<=,=,>=) b, y >= 0`` plus the map back to model variables."""

    def __init__(self, model: LPModel):
        n = model.num_vars
        cols: list[tuple[int, float]] = []
        offset = np.zeros(n)
        extra_rows: list[tuple[int, float]] = []
        for v in range(n):
            lo, hi = model.lower[v], model.upper[v]
            if lo > -math.inf:
                offset[v] = lo
                cols.append((v, 1.0))
                if hi < math.inf:
                    extra_rows.append((len(cols) - 1, hi - lo))
            elif hi < math.inf:
                offset[v] = hi
                cols.append((v, -1.0))
            else:
                cols.append((v, 1.0))
                cols.append((v, -1.0))
        T = np.zeros((n, len(cols)))
        for k, (v, s) in enumerate(cols):
            T[v, k] = s
        A, rels, b = model.dense()
        A_y = A @ T
        b_y = b - A @ offset
        for k, bound in extra_rows:
            row = np.zeros(len(cols))
            row[k] = 1.0
            A_y = np.vstack([A_y, row])
            b_y = np.append(b_y, bound)
            rels = [*rels, Relation.LE]
        c = np.zeros(n)
        for v, a in model.objective.items():
            c[v] = a
        if model.sense is Sense.MAXIMIZE:
            c = -c
        self.A, self.rels, self.b = A_y, list(rels), b_y
        self.c = c @ T
        self.T, self.offset = T, offset

    def to_model(self, y: np.ndarray) -> np.ndarray:
        return self.offset + self.T @ y


class _Basis:
    """Revised-simplex state: basis, explicit inverse and basic values.

    The inverse is updated by elementary row operations after each pivot and
    recomputed from the original rows every ``REFACTOR_EVERY`` pivots, which
    keeps round-off from accumulating.
    """

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list[int]):
        self.A, self.b, self.basis = A, b, basis
        self.refresh()

    def refresh(self) -> None:
        self.Binv = np.linalg.inv(self.A[:, self.basis])
        self.since_refresh = 0
        self._update_x()

    def _update_x(self) -> None:
        self.x = self.Binv @ self.b
        self.x[np.abs(self.x) < ZERO_EPS] = 0.0
        # tiny negatives are round-off on a feasible basis
        np.clip(self.x, 0.0, None, out=self.x)

    def pivot(self, r: int, s: int, w: np.ndarray) -> None:
        self.basis[r] = s
        if self.since_refresh >= REFACTOR_EVERY:
            self.refresh()
            return
        pivot_row = self.Binv[r] / w[r]
        self.Binv -= np.outer(w, pivot_row)
        self.Binv[r] = pivot_row
        self.since_refresh += 1
        self._update_x()

    def drop_row(self, r: int) -> None:
        """Remove the constraint owning the artificial basic at position ``r``."""
        owner = int(np.flatnonzero(self.A[:, self.basis[r]])[0])
        keep = [q for q in range(self.A.shape[0]) if q != owner]
        self.A, self.b = self.A[keep], self.b[keep]
        del self.basis[r]
        self.refresh()


def _run(state: _Basis, c: np.ndarray, allowed: np.ndarray, budget: list[int]) -> Status:
    """Bland's rule: lowest-index improving column, lowest-index leaving variable among ties."""
    while True:
        y = c[state.basis] @ state.Binv
        reduced = c - y @ state.A
        reduced[state.basis] = 0.0
        entering = np.flatnonzero((reduced < -COST_EPS) & allowed)
        if entering.size == 0:
            return Status.OPTIMAL
        if budget[0] <= 0:
            return Status.ITERATION_LIMIT
        s = int(entering[0])
        w = state.Binv @ state.A[:, s]
        rows = np.flatnonzero(w > PIVOT_EPS)
        if rows.size == 0:
            return Status.UNBOUNDED
        ratios = state.x[rows] / w[rows]
        best = max(ratios.min(), 0.0)
        ties = rows[ratios <= best + RATIO_EPS]
        # among tied rows, skip pivots much smaller than the largest available
        ties = ties[w[ties] >= PIVOT_SHARE * w[ties].max()]
        r = int(min(ties, key=lambda q: state.basis[q]))
        state.pivot(r, s, w)
        budget[0] -= 1


def solve(model: LPModel, max_iter: int | None = None) -> LPSolution:
    """Solve ``model`` with the bundled simplex.

    The iteration budget defaults to ``50 * (num_vars + num_constraints)``
    pivots over both phases; running out is reported as
    ``Status.ITERATION_LIMIT``.
    """
    if max_iter is None:
        max_iter = 50 * (model.num_vars + model.num_constraints)
    sf = _StandardForm(model)
    A, b, rels = sf.A.copy(), sf.b.copy(), list(sf.rels)
    n_y = A.shape[1]
    empty = np.zeros(model.num_vars)

    # equilibrate rows, drop empty ones, make the right-hand side nonnegative
    keep = []
    for r in range(A.shape[0]):
        scale = np.abs(A[r]).max(initial=0.0)
        if scale == 0.0:
            ok = {
                Relation.LE: b[r] >= -TOL,
                Relation.GE: b[r] <= TOL,
                Relation.EQ: abs(b[r]) <= TOL,
            }[rels[r]]
            if not ok:
                return LPSolution(Status.INFEASIBLE, empty, math.nan)
            continue
        A[r] /= scale
        b[r] /= scale
        # a homogeneous >= row becomes <= so its slack can start in the basis
        if b[r] < 0 or (b[r] == 0 and rels[r] is Relation.GE):
            A[r], b[r] = -A[r], -b[r]
            rels[r] = {Relation.LE: Relation.GE, Relation.GE: Relation.LE, Relation.EQ: Relation.EQ}[rels[r]]
        keep.append(r)
    A, b = A[keep], b[keep]
    rels = [rels[r] for r in keep]
    m = len(keep)

    n_slack = sum(rel is not Relation.EQ for rel in rels)
    n_art = sum(rel is not Relation.LE for rel in rels)
    width = n_y + n_slack + n_art
    full = np.zeros((m, width))
    full[:, :n_y] = A
    basis: list[int] = []
    slack, art = n_y, n_y + n_slack
    artificial = np.zeros(width, dtype=bool)
    for r, rel in enumerate(rels):
        if rel is Relation.LE:
            full[r, slack] = 1.0
            basis.append(slack)
            slack += 1
        else:
            if rel is Relation.GE:
                full[r, slack] = -1.0
                slack += 1
            full[r, art] = 1.0
            artificial[art] = True
            basis.append(art)
            art += 1

    if m == 0:
        x = sf.to_model(np.zeros(n_y))
        c0 = np.zeros(width)
        c0[:n_y] = sf.c
        if np.any(c0 < -COST_EPS):
            return LPSolution(Status.UNBOUNDED, empty, math.nan)
        return LPSolution(Status.OPTIMAL, x, model.objective_value(x), 0, model.max_violation(x))

    state = _Basis(full, b, basis)
    budget = [max_iter]
    if n_art:
        status = _run(state, artificial.astype(float), np.ones(width, dtype=bool), budget)
        if status is Status.ITERATION_LIMIT:
            return LPSolution(status, empty, math.nan, max_iter - budget[0])
        residual = float(state.x[artificial[state.basis]].sum())
        if residual > PHASE1_EPS:
            return LPSolution(Status.INFEASIBLE, empty, math.nan, max_iter - budget[0])
        # drive remaining zero-valued artificials out; rows with no other support are redundant
        r = 0
        while r < len(state.basis):
            if artificial[state.basis[r]]:
                row = state.Binv[r] @ state.A
                candidates = np.flatnonzero((np.abs(row) > PIVOT_EPS) & ~artificial)
                candidates = [s for s in candidates if s not in state.basis]
                if candidates:
                    s = int(candidates[0])
                    state.pivot(r, s, state.Binv @ state.A[:, s])
                else:
                    state.drop_row(r)
                    continue
            r += 1

    c = np.zeros(width)
    c[:n_y] = sf.c
    status = _run(state, c, ~artificial, budget)
    iterations = max_iter - budget[0]
    if status is not Status.OPTIMAL:
        return LPSolution(status, empty, math.nan, iterations)

    y_full = np.zeros(width)
    y_full[state.basis] = np.clip(state.x, 0.0, None)
    x = sf.to_model(y_full[:n_y])
    return LPSolution(Status.OPTIMAL, x, model.objective_value(x), iterations, model.max_violation(x))


def scipy_solver(model: LPModel) -> LPSolution:
    """Adapter for ``scipy.optimize.linprog`` (HiGHS) behind the same contract."""
    from scipy.optimize import linprog

    A, rels, b = model.dense()
    c = np.zeros(model.num_vars)
    for v, a in model.objective.items():
        c[v] = a
    sign = -1.0 if model.sense is Sense.MAXIMIZE else 1.0
    ub_rows = [r for r, rel in enumerate(rels) if rel is not Relation.EQ]
    eq_rows = [r for r, rel in enumerate(rels) if rel is Relation.EQ]
    flip = np.array([1.0 if rels[r] is Relation.LE else -1.0 for r in ub_rows])
    res = linprog(
        sign * c,
        A_ub=A[ub_rows] * flip[:, None] if ub_rows else None,
        b_ub=b[ub_rows] * flip if ub_rows else None,
        A_eq=A[eq_rows] if eq_rows else None,
        b_eq=b[eq_rows] if eq_rows else None,
        bounds=list(zip([None if lo == -math.inf else lo for lo in model.lower],
                        [None if hi == math.inf else hi for hi in model.upper])),
        method="highs",
    )
    status = {0: Status.OPTIMAL, 1: Status.ITERATION_LIMIT, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}.get(
        res.status, Status.INFEASIBLE
    )
    if status is not Status.OPTIMAL:
        return LPSolution(status, np.zeros(model.num_vars), math.nan)
    x = np.asarray(res.x)
    return LPSolution(status, x, model.objective_value(x), int(res.nit), model.max_violation(x))


SolverFn = Callable[[LPModel], LPSolution]
