"""Linear programs over fairness polytopes and the bundled simplex solver."""

from piif.lpcore.builders import (
    add_allocation_block,
    add_coordinate_constraints,
    add_equality,
    add_eu_preference_constraint,
    add_sd_preference_constraints,
    add_simplex_constraints,
    add_tv_constraint,
)
from piif.lpcore.model import Constraint, LPModel, LPSolution, Relation, Sense, Status
from piif.lpcore.polytope import (
    UnsupportedPreference,
    add_policy_blocks,
    add_preference_rows,
    build_piif_polytope,
    pi_block,
    surrogate_block,
)
from piif.lpcore.simplex import Solver, scipy_solver, solve

__all__ = [
    "Constraint",
    "LPModel",
    "LPSolution",
    "Relation",
    "Sense",
    "Solver",
    "Status",
    "UnsupportedPreference",
    "add_allocation_block",
    "add_coordinate_constraints",
    "add_equality",
    "add_eu_preference_constraint",
    "add_policy_blocks",
    "add_preference_rows",
    "add_sd_preference_constraints",
    "add_simplex_constraints",
    "add_tv_constraint",
    "build_piif_polytope",
    "pi_block",
    "scipy_solver",
    "solve",
    "surrogate_block",
]
