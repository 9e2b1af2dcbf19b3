"""Sparse linear-program container and its text dump."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np


class Sense(enum.Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class Relation(enum.Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[int, float]
    relation: Relation
    rhs: float
    name: str = ""

    def activity(self, x: np.ndarray) -> float:
        return float(sum(a * x[v] for v, a in self.coeffs.items()))

    def violation(self, x: np.ndarray) -> float:
        """Amount by which ``x`` violates the row (0 when satisfied)."""
        lhs = self.activity(x)
        if self.relation is Relation.LE:
            return max(0.0, lhs - self.rhs)
        if self.relation is Relation.GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)

    def scale(self) -> float:
        return max([1.0, abs(self.rhs), *(abs(a) for a in self.coeffs.values())])


@dataclass
class LPModel:
    """Variables with bounds, linear rows and a linear objective.

    Variables are dense integer ids; named blocks group the ids of one vector
    variable (for instance one allocation) so builders and decoders can find
    them again.
    """

    lower: list[float] = field(default_factory=list)
    upper: list[float] = field(default_factory=list)
    var_names: list[str] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    sense: Sense = Sense.MINIMIZE
    blocks: dict[str, list[int]] = field(default_factory=dict)
    _names: set[str] = field(default_factory=set, repr=False)

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def add_var(self, name: str, lower: float = 0.0, upper: float = math.inf) -> int:
        if name in self._names:
            raise ValueError(f"duplicate variable name {name!r}")
        if lower > upper:
            raise ValueError(f"variable {name!r}: lower bound {lower} exceeds upper bound {upper}")
        self._names.add(name)
        self.var_names.append(name)
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        return self.num_vars - 1

    def add_block(self, name: str, size: int, lower: float = 0.0, upper: float = math.inf) -> list[int]:
        """Add ``size`` variables named ``name[0] .. name[size-1]`` and register the block."""
        if name in self.blocks:
            raise ValueError(f"duplicate block {name!r}")
        ids = [self.add_var(f"{name}[{c}]", lower, upper) for c in range(size)]
        self.blocks[name] = ids
        return ids

    def add_constraint(
        self, coeffs: Mapping[int, float], relation: Relation | str, rhs: float, name: str = ""
    ) -> Constraint:
        relation = Relation(relation)
        clean: dict[int, float] = {}
        for v, a in coeffs.items():
            if not 0 <= v < self.num_vars:
                raise IndexError(f"constraint references unknown variable {v}")
            if a != 0:
                clean[v] = clean.get(v, 0.0) + float(a)
        row = Constraint(clean, relation, float(rhs), name or f"r{self.num_constraints}")
        self.constraints.append(row)
        return row

    def set_objective(self, coeffs: Mapping[int, float], sense: Sense | str = Sense.MINIMIZE) -> None:
        for v in coeffs:
            if not 0 <= v < self.num_vars:
                raise IndexError(f"objective references unknown variable {v}")
        self.objective = {v: float(a) for v, a in coeffs.items() if a != 0}
        self.sense = Sense(sense)

    def objective_value(self, x: Sequence[float]) -> float:
        return float(sum(a * x[v] for v, a in self.objective.items()))

    def max_violation(self, x: np.ndarray) -> float:
        """Largest constraint or bound violation, rows scaled by their largest coefficient."""
        worst = 0.0
        for row in self.constraints:
            worst = max(worst, row.violation(x) / row.scale())
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        worst = max(worst, float(np.max(lo - x, initial=0.0)), float(np.max(x - hi, initial=0.0)))
        return worst

    def dense(self) -> tuple[np.ndarray, list[Relation], np.ndarray]:
        """Constraint matrix, relations and right-hand sides as dense arrays."""
        A = np.zeros((self.num_constraints, self.num_vars))
        for r, row in enumerate(self.constraints):
            for v, a in row.coeffs.items():
                A[r, v] = a
        return A, [row.relation for row in self.constraints], np.array([row.rhs for row in self.constraints])

    def to_lp_string(self) -> str:
        """Dump in CPLEX LP text format. Brackets in names become parentheses."""

        def nm(v: int) -> str:
            return self.var_names[v].replace("[", "(").replace("]", ")")

        def expr(coeffs: Mapping[int, float]) -> str:
            if not coeffs:
                return "0 " + nm(0) if self.num_vars else "0"
            parts = []
            for v, a in coeffs.items():
                sign = "-" if a < 0 else "+"
                parts.append(f"{sign} {abs(a):.17g} {nm(v)}")
            text = " ".join(parts)
            return text[2:] if text.startswith("+ ") else text

        ops = {Relation.LE: "<=", Relation.GE: ">=", Relation.EQ: "="}
        lines = ["Maximize" if self.sense is Sense.MAXIMIZE else "Minimize", f" obj: {expr(self.objective)}"]
        lines.append("Subject To")
        for row in self.constraints:
            lines.append(f" {row.name}: {expr(row.coeffs)} {ops[row.relation]} {row.rhs:.17g}")
        lines.append("Bounds")
        for v in range(self.num_vars):
            lo, hi = self.lower[v], self.upper[v]
            if lo == -math.inf and hi == math.inf:
                lines.append(f" {nm(v)} free")
            elif hi == math.inf:
                if lo != 0.0:
                    lines.append(f" {nm(v)} >= {lo:.17g}")
            elif lo == -math.inf:
                lines.append(f" -inf <= {nm(v)} <= {hi:.17g}")
            else:
                lines.append(f" {lo:.17g} <= {nm(v)} <= {hi:.17g}")
        lines.append("End")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LPSolution:
    status: Status
    values: np.ndarray
    objective_value: float
    iterations: int = 0
    max_violation: float = math.nan

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL

    def block(self, model: LPModel, name: str) -> np.ndarray:
        return self.values[model.blocks[name]]
