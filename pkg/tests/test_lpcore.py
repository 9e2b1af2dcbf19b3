from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from piif.audit import min_utility_in_ball
from piif.core import Allocation, make_instance
from piif.generators import distinct_favorites, multitask_cascade
from piif.lpcore import (
    LPModel,
    Relation,
    Sense,
    Status,
    add_allocation_block,
    add_eu_preference_constraint,
    add_sd_preference_constraints,
    add_simplex_constraints,
    add_tv_constraint,
    build_piif_polytope,
    pi_block,
    scipy_solver,
    solve,
    surrogate_block,
)
from piif.preferences import ExpectedUtility, StochasticDominance, TrivialReflexive, WrongVariant
from piif.testing import random_instance


def vertex_optimum(A: np.ndarray, rels: list[Relation], b: np.ndarray, c: np.ndarray, box: float) -> float | None:
    """Brute-force maximum of ``c.x`` over a boxed polytope by enumerating vertices.

    A vertex has ``n`` independent active rows, which always include a maximal
    independent subset of the equalities. Returns ``None`` for an empty polytope.
    """
    n = A.shape[1]
    eq_all = [r for r, rel in enumerate(rels) if rel is Relation.EQ]
    eq: list[int] = []
    for r in eq_all:
        if np.linalg.matrix_rank(A[[*eq, r]]) > len(eq):
            eq.append(r)
    ineq = [r for r in range(len(rels)) if rels[r] is not Relation.EQ]
    # every inequality as G x <= h, box included
    G = np.array([A[r] if rels[r] is Relation.LE else -A[r] for r in ineq] + list(-np.eye(n)) + list(np.eye(n)))
    h = np.array([b[r] if rels[r] is Relation.LE else -b[r] for r in ineq] + [0.0] * n + [box] * n)
    need = n - len(eq)
    subsets = list(itertools.combinations(range(len(G)), need))
    combos = np.array(subsets, dtype=int).reshape(len(subsets), need)
    M = np.concatenate([np.broadcast_to(A[eq], (len(combos), len(eq), n)), G[combos]], axis=1)
    rhs = np.concatenate([np.broadcast_to(b[eq], (len(combos), len(eq))), h[combos]], axis=1)
    regular = np.abs(np.linalg.det(M)) > 1e-9
    if not regular.any():
        return None
    X = np.linalg.solve(M[regular], rhs[regular][..., None])[..., 0]
    feasible = np.all(X @ G.T <= h + 1e-9, axis=1)
    if eq_all:
        feasible &= np.all(np.abs(X @ A[eq_all].T - b[eq_all]) <= 1e-9, axis=1)
    return float((X[feasible] @ c).max()) if feasible.any() else None


def random_lp(rng: np.random.Generator, n: int, m: int, box: float, integer: bool) -> tuple[LPModel, np.ndarray]:
    model = LPModel()
    for v in range(n):
        model.add_var(f"x{v}", 0.0, box)
    for _ in range(m):
        coeffs = rng.integers(-3, 4, size=n).astype(float) if integer else rng.normal(size=n)
        rel = rng.choice(list(Relation), p=[0.5, 0.2, 0.3])
        x0 = rng.random(n) * box
        # right-hand side near a random point so most systems are feasible
        rhs = float(coeffs @ x0 + (rng.integers(-2, 3) if integer else rng.normal()))
        model.add_constraint(dict(enumerate(coeffs)), rel, rhs)
    c = rng.integers(-3, 4, size=n).astype(float) if integer else rng.normal(size=n)
    model.set_objective(dict(enumerate(c)), Sense.MAXIMIZE)
    return model, c


@pytest.mark.parametrize("integer", [False, True], ids=["real", "integer"])
def test_solver_matches_vertex_enumeration(integer):
    rng = np.random.default_rng(31 + integer)
    outcomes = {Status.OPTIMAL: 0, Status.INFEASIBLE: 0}
    for trial in range(120):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(1, 5 if n >= 7 else 7))
        model, c = random_lp(rng, n, m, box=float(rng.integers(1, 4)), integer=integer)
        A, rels, b = model.dense()
        expected = vertex_optimum(A, rels, b, c, box=model.upper[0])
        sol = solve(model)
        if expected is None:
            assert sol.status is Status.INFEASIBLE, trial
        else:
            assert sol.status is Status.OPTIMAL, trial
            assert sol.objective_value == pytest.approx(expected, abs=1e-6), trial
            assert model.max_violation(sol.values) <= 1e-7
        outcomes[sol.status] += 1
    assert outcomes[Status.OPTIMAL] > 30 and outcomes[Status.INFEASIBLE] > 5


def test_solver_agrees_with_scipy_on_piif_models():
    pytest.importorskip("scipy")
    rng = np.random.default_rng(5)
    for _ in range(15):
        inst = random_instance(rng, 3, 3, preference="mixed", coarse=True)
        model = build_piif_polytope(inst)
        c = rng.normal(size=model.num_vars)
        model.set_objective(dict(enumerate(c)), Sense.MAXIMIZE)
        ours, ref = solve(model), scipy_solver(model)
        assert ours.status is ref.status is Status.OPTIMAL
        assert ours.objective_value == pytest.approx(ref.objective_value, abs=1e-6)


class TestSolveExamples:
    def test_bounded(self):
        m = LPModel()
        x = m.add_var("x")
        m.add_constraint({x: 1}, "<=", 3)
        m.set_objective({x: 1}, "maximize")
        sol = solve(m)
        assert sol.status is Status.OPTIMAL and sol.objective_value == pytest.approx(3)

    def test_infeasible(self):
        m = LPModel()
        x = m.add_var("x")
        m.add_constraint({x: 1}, "<=", -1)
        assert solve(m).status is Status.INFEASIBLE

    def test_unbounded(self):
        m = LPModel()
        x = m.add_var("x")
        m.set_objective({x: 1}, "maximize")
        assert solve(m).status is Status.UNBOUNDED

    def test_free_and_negative_bounds(self):
        m = LPModel()
        x = m.add_var("x", lower=-math.inf)
        y = m.add_var("y", lower=-math.inf, upper=-2)
        m.add_constraint({x: 1, y: 1}, ">=", -5)
        m.set_objective({x: 1, y: -1}, "minimize")
        sol = solve(m)
        assert sol.status is Status.OPTIMAL
        assert sol.objective_value == pytest.approx(-5 + 2 * 2)

    def test_iteration_limit_is_a_status(self):
        m = LPModel()
        xs = m.add_block("x", 4)
        add_simplex_constraints(m, xs)
        m.set_objective({xs[3]: 1}, "maximize")
        assert solve(m, max_iter=0).status is Status.ITERATION_LIMIT

    def test_redundant_equalities(self):
        m = LPModel()
        xs = add_allocation_block(m, "x", 3)
        m.add_constraint({v: 2.0 for v in xs}, "=", 2.0)
        m.set_objective({xs[1]: 1}, "maximize")
        sol = solve(m)
        assert sol.status is Status.OPTIMAL and sol.objective_value == pytest.approx(1)

    def test_deterministic(self):
        inst = distinct_favorites(4)
        m = build_piif_polytope(inst)
        m.set_objective({v: 1.0 for v in m.blocks[pi_block(0)][:2]}, "maximize")
        assert np.array_equal(solve(m).values, solve(m).values)


class TestBuilders:
    def test_simplex_block(self):
        m = LPModel()
        xs = add_allocation_block(m, "x", 3)
        assert m.num_constraints == 1 and all(m.lower[v] == 0 for v in xs)
        m.set_objective({xs[0]: 1}, "maximize")
        sol = solve(m)
        assert sol.values[xs].tolist() == pytest.approx([1, 0, 0])

    def test_two_blocks_independent(self):
        m = LPModel()
        a, b = add_allocation_block(m, "a", 2), add_allocation_block(m, "b", 2)
        m.set_objective({a[0]: 1, b[1]: 1}, "maximize")
        assert solve(m).objective_value == pytest.approx(2)

    def test_tv_row_count(self):
        m = LPModel()
        p = add_allocation_block(m, "p", 3)
        add_tv_constraint(m, p, Allocation.point_mass(1, 3), 0.5)
        assert m.num_constraints == 1 + 2 * 3 + 1
        assert m.num_vars == 3 + 3

    @pytest.mark.parametrize("bound, expected", [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)])
    def test_tv_ball_reach(self, bound, expected):
        m = LPModel()
        p = add_allocation_block(m, "p", 3)
        add_tv_constraint(m, p, Allocation.point_mass(1, 3), bound)
        m.set_objective({p[0]: 1}, "maximize")
        assert solve(m).objective_value == pytest.approx(expected)

    def test_tv_zero_forces_equality(self):
        m = LPModel()
        p, q = add_allocation_block(m, "p", 3), add_allocation_block(m, "q", 3)
        add_tv_constraint(m, p, q, 0.0)
        m.add_constraint({q[2]: 1}, "=", 0.7)
        m.set_objective({p[0]: 1}, "maximize")
        sol = solve(m)
        assert sol.values[p][2] == pytest.approx(0.7)

    def test_tv_ball_minimum_matches_closed_form(self, rng):
        for _ in range(30):
            u, q, r = rng.random(4), Allocation(rng.dirichlet(np.ones(4))), float(rng.random())
            m = LPModel()
            p = add_allocation_block(m, "p", 4)
            add_tv_constraint(m, p, q, r)
            m.set_objective(dict(zip(p, u)), "minimize")
            assert solve(m).objective_value == pytest.approx(min_utility_in_ball(u, q, r), abs=1e-7)

    def test_eu_row_forces_low_point(self):
        m = LPModel()
        p = add_allocation_block(m, "p", 2)
        add_eu_preference_constraint(m, (1, 0.5), Allocation.point_mass(1, 2), p)
        assert m.num_constraints == 2
        m.set_objective({p[0]: 1}, "maximize")
        assert solve(m).objective_value == pytest.approx(0.0, abs=1e-9)

    def test_eu_constant_utility_vacuous(self):
        m = LPModel()
        p = add_allocation_block(m, "p", 2)
        add_eu_preference_constraint(m, (0.3, 0.3), Allocation.point_mass(1, 2), p)
        m.set_objective({p[0]: 1}, "maximize")
        assert solve(m).objective_value == pytest.approx(1.0)

    @pytest.mark.parametrize("u, rows", [((0.9, 0.5, 0.1), 2), ((5, 5, 5), 0), ((1, 1, 0), 1)])
    def test_sd_row_count(self, u, rows):
        m = LPModel()
        p, q = add_allocation_block(m, "p", 3), add_allocation_block(m, "q", 3)
        add_sd_preference_constraints(m, StochasticDominance(u), p, q)
        assert m.num_constraints == 2 + rows

    def test_sd_top_outcome_dominates(self):
        m = LPModel()
        q = add_allocation_block(m, "q", 3)
        add_sd_preference_constraints(m, StochasticDominance((0.9, 0.5, 0.1)), Allocation.point_mass(0, 3), q)
        for target in range(3):
            m.set_objective({q[target]: 1}, "maximize")
            assert solve(m).objective_value == pytest.approx(1.0)

    def test_sd_wrong_variant(self):
        m = LPModel()
        p = add_allocation_block(m, "p", 2)
        with pytest.raises(WrongVariant):
            add_sd_preference_constraints(m, ExpectedUtility((1, 0)), p, p)

    def test_bad_references(self):
        m = LPModel()
        m.add_var("x")
        with pytest.raises(IndexError):
            m.add_constraint({3: 1.0}, "<=", 1)
        with pytest.raises(ValueError):
            m.add_var("x")


class TestPolytope:
    def test_counts_three_by_three(self):
        inst = make_instance(np.random.default_rng(0).random((3, 3)), np.full((3, 3), 0.4) - 0.4 * np.eye(3))
        m = build_piif_polytope(inst)
        assert m.num_vars == 3 * 3 + 6 * 3 + 6 * 3 == 45
        names = [r.name for r in m.constraints]
        tv_rows = [n for n in names if n.startswith("z[")]
        assert len(tv_rows) == 6 * (2 * 3 + 1) == 42
        assert sum(n.startswith("eu_") for n in names) == 6
        assert sum(n.startswith("simplex_") for n in names) == 9
        assert set(m.blocks) >= {pi_block(0), surrogate_block(0, 1), surrogate_block(2, 1)}

    def test_multitask_has_no_slack(self):
        inst = multitask_cascade(3, 10)
        m = build_piif_polytope(inst)
        assert m.num_vars == 3 * 3 + 6 * 3
        assert not any(name.startswith("z[") for name in m.var_names)

    def test_constant_policy_is_feasible(self, rng):
        for s in range(40):
            inst = random_instance(rng, 3, 3, preference=("eu", "sd", "mixed")[s % 3], multitask=s % 4 == 0)
            m = build_piif_polytope(inst)
            x = np.zeros(m.num_vars)
            for name, ids in m.blocks.items():
                if not name.startswith("z["):
                    x[ids] = 1 / 3
            assert m.max_violation(x) <= 1e-12

    def test_metric_one_is_unconstrained(self):
        inst = make_instance(np.eye(3), np.ones((3, 3)) - np.eye(3))
        m = build_piif_polytope(inst)
        for i in range(3):
            m.objective.update({m.blocks[pi_block(i)][i]: 1.0})
        m.sense = Sense.MAXIMIZE
        assert solve(m).objective_value == pytest.approx(3)

    def test_metric_zero_trivial_gives_constant(self):
        inst = make_instance(None, np.zeros((3, 3)), preferences=[TrivialReflexive()] * 3, outcome_labels="abc")
        m = build_piif_polytope(inst)
        m.set_objective({m.blocks[pi_block(0)][0]: 1.0, m.blocks[pi_block(1)][1]: 1.0}, "maximize")
        sol = solve(m)
        rows = [sol.values[m.blocks[pi_block(i)]] for i in range(3)]
        assert np.allclose(rows[0], rows[1]) and np.allclose(rows[1], rows[2])
        assert sol.objective_value == pytest.approx(1)

    def test_presolve_keeps_projection(self, rng):
        for s in range(25):
            inst = random_instance(rng, 3, 3, preference=("eu", "sd")[s % 2], coarse=True)
            c = rng.normal(size=(3, 3))
            values = []
            for presolve in (False, True):
                m = build_piif_polytope(inst, presolve=presolve)
                m.set_objective(
                    {v: c[i, k] for i in range(3) for k, v in enumerate(m.blocks[pi_block(i)])}, "maximize"
                )
                values.append(solve(m).objective_value)
            assert values[0] == pytest.approx(values[1], abs=1e-7)

    def test_lp_dump_lists_rows(self):
        m = build_piif_polytope(distinct_favorites(2))
        text = m.to_lp_string()
        assert "pi(0)(0)" in text and "Subject To" in text
