"""Domain model: outcomes, individuals, allocations, policies, metrics and instances.

Everything here is immutable after construction. Allocations are points of the
outcome simplex, a policy maps every individual to one allocation, and an
instance bundles the similarity metric(s) and per-individual preferences.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

if TYPE_CHECKING:
    from piif.preferences import PreferenceRelation

#: Tolerance on the simplex sum of an allocation.
SUM_TOL = 1e-9
#: Feasibility / comparison tolerance shared by audits, preferences and the LP solver.
TOL = 1e-7


class ValidationError(ValueError):
    """Raised when a domain object violates its invariants."""


class LengthMismatch(ValidationError):
    """Two allocations (or an allocation and a vector) have different lengths."""


class NoUtility(ValueError):
    """A preference relation has no utility-vector representation."""


@dataclass(frozen=True)
class Outcome:
    id: int
    label: str = ""


@dataclass(frozen=True)
class Individual:
    id: int
    label: str = ""
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.weight) or self.weight < 0:
            raise ValidationError(f"individual {self.id}: weight must be finite and >= 0, got {self.weight}")


@dataclass(frozen=True)
class Allocation:
    """A distribution over outcomes."""

    probs: tuple[float, ...]

    def __init__(self, probs: Iterable[float]):
        values = tuple(float(p) for p in probs)
        if not values:
            raise ValidationError("allocation must have at least one outcome")
        if any(not np.isfinite(p) for p in values):
            raise ValidationError(f"allocation has non-finite entries: {values}")
        if min(values) < -SUM_TOL:
            raise ValidationError(f"allocation has negative entries: {values}")
        if abs(sum(values) - 1.0) > SUM_TOL:
            raise ValidationError(f"allocation sums to {sum(values)!r}, expected 1")
        object.__setattr__(self, "probs", values)

    @classmethod
    def point_mass(cls, outcome: int, n_outcomes: int) -> Allocation:
        probs = [0.0] * n_outcomes
        probs[outcome] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, n_outcomes: int) -> Allocation:
        return cls([1.0 / n_outcomes] * n_outcomes)

    @classmethod
    def from_solver(cls, values: Sequence[float], tol: float = TOL) -> Allocation:
        """Clean a numerically-noisy solver vector into a valid allocation.

        Negative entries above ``-tol`` are clipped to zero and the vector is
        renormalized; anything further off is rejected.
        """
        arr = np.asarray(values, dtype=float)
        if arr.min() < -tol or abs(arr.sum() - 1.0) > tol * max(1, arr.size):
            raise ValidationError(f"solver vector is not a distribution: {arr.tolist()}")
        arr = np.clip(arr, 0.0, None)
        return cls(arr / arr.sum())

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, c: int) -> float:
        return self.probs[c]

    def as_array(self) -> np.ndarray:
        return np.array(self.probs, dtype=float)

    def mix(self, other: Allocation, lam: float) -> Allocation:
        """Return ``lam * self + (1 - lam) * other``."""
        _check_lengths(self, other)
        return Allocation(lam * self.as_array() + (1.0 - lam) * other.as_array())

    def isclose(self, other: Allocation, tol: float = TOL) -> bool:
        _check_lengths(self, other)
        return bool(np.max(np.abs(self.as_array() - other.as_array())) <= tol)


def _check_lengths(p: Allocation, q: Allocation) -> None:
    if len(p) != len(q):
        raise LengthMismatch(f"allocations have lengths {len(p)} and {len(q)}")


@dataclass(frozen=True)
class Policy:
    """Map from individual id to that individual's allocation."""

    alloc: Mapping[int, Allocation]

    def __post_init__(self) -> None:
        object.__setattr__(self, "alloc", dict(sorted(self.alloc.items())))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> Policy:
        return cls({i: Allocation(row) for i, row in enumerate(rows)})

    @classmethod
    def constant(cls, allocation: Allocation, n_individuals: int) -> Policy:
        return cls({i: allocation for i in range(n_individuals)})

    @classmethod
    def deterministic(cls, outcomes: Sequence[int], n_outcomes: int) -> Policy:
        """Individual ``i`` receives outcome ``outcomes[i]`` with probability one."""
        return cls({i: Allocation.point_mass(c, n_outcomes) for i, c in enumerate(outcomes)})

    def __getitem__(self, i: int) -> Allocation:
        return self.alloc[i]

    def __len__(self) -> int:
        return len(self.alloc)

    def matrix(self) -> np.ndarray:
        """Allocations stacked as an ``(n_individuals, n_outcomes)`` array, rows in id order."""
        return np.array([a.probs for a in self.alloc.values()], dtype=float)

    def mix(self, other: Policy, lam: float) -> Policy:
        return Policy({i: a.mix(other[i], lam) for i, a in self.alloc.items()})


@dataclass(frozen=True, eq=False)
class Metric:
    """Symmetric, zero-diagonal distance matrix with entries in [0, 1]."""

    dist: np.ndarray

    def __post_init__(self) -> None:
        d = np.array(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValidationError(f"metric must be a square matrix, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ValidationError("metric has non-finite entries")
        if np.any(d < 0) or np.any(d > 1):
            raise ValidationError("metric entries must lie in [0, 1]")
        if np.any(np.diag(d) != 0):
            raise ValidationError("metric must have a zero diagonal")
        if not np.array_equal(d, d.T):
            raise ValidationError("metric must be symmetric")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

    @classmethod
    def constant(cls, n: int, value: float) -> Metric:
        d = np.full((n, n), float(value))
        np.fill_diagonal(d, 0.0)
        return cls(d)

    def __call__(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Metric) and np.array_equal(self.dist, other.dist)

    @property
    def size(self) -> int:
        return self.dist.shape[0]

    def lint(self, tol: float = 1e-12) -> list[tuple[int, int, int]]:
        """Return triangle-inequality violations ``(i, j, k)`` and warn about them.

        A violation means ``d(i, k) > d(i, j) + d(j, k)``. Never an error: the
        fairness notions do not rely on the triangle inequality.
        """
        d = self.dist
        bad = np.argwhere(d[:, None, :] > d[:, :, None] + d[None, :, :] + tol)
        triples = [(int(i), int(j), int(k)) for i, j, k in bad]
        if triples:
            warnings.warn(f"metric violates the triangle inequality on {len(triples)} triples", stacklevel=2)
        return triples


class Divergence(enum.Enum):
    TV = "tv"


def tv_distance(p: Allocation, q: Allocation) -> float:
    """Total variation distance ``0.5 * sum_c |p_c - q_c|``."""
    _check_lengths(p, q)
    return 0.5 * float(np.abs(p.as_array() - q.as_array()).sum())


@dataclass(frozen=True, eq=False)
class Instance:
    outcomes: tuple[Outcome, ...]
    individuals: tuple[Individual, ...]
    metrics: tuple[Metric, ...]
    preferences: Mapping[int, PreferenceRelation]
    divergence: Divergence = Divergence.TV
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        object.__setattr__(self, "individuals", tuple(self.individuals))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        object.__setattr__(self, "preferences", dict(sorted(self.preferences.items())))
        k, n = len(self.outcomes), len(self.individuals)
        if k == 0 or n == 0:
            raise ValidationError("instance needs at least one outcome and one individual")
        if [o.id for o in self.outcomes] != list(range(k)):
            raise ValidationError("outcome ids must be 0..|C|-1 in order")
        if [x.id for x in self.individuals] != list(range(n)):
            raise ValidationError("individual ids must be 0..|X|-1 in order")
        if sum(x.weight for x in self.individuals) <= 0:
            raise ValidationError("total individual weight must be positive")
        if len(self.metrics) not in {1, k}:
            raise ValidationError(f"expected 1 or {k} metrics, got {len(self.metrics)}")
        for m in self.metrics:
            if m.size != n:
                raise ValidationError(f"metric has size {m.size}, expected {n}")
        if set(self.preferences) != set(range(n)):
            raise ValidationError("every individual needs exactly one preference relation")
        for i, rel in self.preferences.items():
            rel.validate(k)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.outcomes == other.outcomes
            and self.individuals == other.individuals
            and self.metrics == other.metrics
            and self.preferences == other.preferences
            and self.divergence == other.divergence
        )

    @property
    def n_individuals(self) -> int:
        return len(self.individuals)

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    @property
    def is_multitask(self) -> bool:
        return len(self.metrics) > 1

    @property
    def metric(self) -> Metric:
        """The single task metric; raises on multi-task instances."""
        if self.is_multitask:
            raise ValidationError("multi-task instance has one metric per outcome")
        return self.metrics[0]

    @property
    def weights(self) -> np.ndarray:
        return np.array([x.weight for x in self.individuals], dtype=float)

    def pairs(self) -> list[tuple[int, int]]:
        """All ordered pairs ``(i, j)`` with ``i != j``, sorted."""
        n = self.n_individuals
        return [(i, j) for i in range(n) for j in range(n) if i != j]

    def utility_matrix(self) -> np.ndarray:
        """Utilities stacked as ``(n_individuals, n_outcomes)``; raises NoUtility."""
        return np.array([self.preferences[i].utility() for i in range(self.n_individuals)], dtype=float)

    def with_preferences(self, preferences: Mapping[int, PreferenceRelation]) -> Instance:
        return replace(self, preferences=dict(preferences))

    def with_metrics(self, metrics: Sequence[Metric]) -> Instance:
        return replace(self, metrics=tuple(metrics))


def make_instance(
    utilities: Sequence[Sequence[float]] | None = None,
    metric: Sequence[Sequence[float]] | Sequence[Sequence[Sequence[float]]] | None = None,
    *,
    preferences: Mapping[int, PreferenceRelation] | Sequence[PreferenceRelation] | None = None,
    weights: Sequence[float] | None = None,
    outcome_labels: Sequence[str] | None = None,
    individual_labels: Sequence[str] | None = None,
    name: str = "",
) -> Instance:
    """Convenience constructor.

    ``utilities`` builds expected-utility preferences; pass ``preferences`` for
    any other variant. ``metric`` is either one ``n x n`` matrix or a stack of
    ``|C|`` of them (multi-task). Defaults to the all-zeros metric.
    """
    from piif.preferences import ExpectedUtility

    if preferences is None:
        if utilities is None:
            raise ValueError("pass utilities or preferences")
        preferences = {i: ExpectedUtility(u) for i, u in enumerate(utilities)}
    elif not isinstance(preferences, Mapping):
        preferences = dict(enumerate(preferences))
    n = len(preferences)
    k = (
        len(utilities[0])
        if utilities is not None
        else (len(outcome_labels) if outcome_labels is not None else _infer_outcomes(preferences))
    )
    if metric is None:
        metrics = [Metric(np.zeros((n, n)))]
    else:
        arr = np.asarray(metric, dtype=float)
        metrics = [Metric(arr)] if arr.ndim == 2 else [Metric(m) for m in arr]
    weights = [1.0] * n if weights is None else list(weights)
    outcome_labels = outcome_labels or [f"c{c}" for c in range(k)]
    individual_labels = individual_labels or [f"x{i}" for i in range(n)]
    return Instance(
        outcomes=tuple(Outcome(c, outcome_labels[c]) for c in range(k)),
        individuals=tuple(Individual(i, individual_labels[i], weights[i]) for i in range(n)),
        metrics=tuple(metrics),
        preferences=preferences,
        name=name,
    )


def _infer_outcomes(preferences: Mapping[int, PreferenceRelation]) -> int:
    from piif.preferences import has_utility

    for rel in preferences.values():
        u = rel.utility() if has_utility(rel) else None
        if u is not None:
            return len(u)
    raise ValueError("cannot infer the number of outcomes; pass outcome_labels")


def social_welfare(inst: Instance, pi: Policy) -> float:
    """Weighted sum of utilities ``sum_i w_i <u_i, pi(i)>``; raises NoUtility."""
    u = inst.utility_matrix()
    return float(inst.weights @ np.einsum("ic,ic->i", u, pi.matrix()))


def has_unit_weights(inst: Instance) -> bool:
    return all(x.weight == 1.0 for x in inst.individuals)


def reported_welfare(inst: Instance, pi: Policy) -> float:
    """Welfare as reported by the optimizer.

    Plain sum when every weight is one, otherwise per unit of total weight, so
    instances whose individuals stand for population fractions report average
    welfare.
    """
    w = social_welfare(inst, pi)
    return w if has_unit_weights(inst) else w / float(inst.weights.sum())


def normalize_utilities(inst: Instance) -> Instance:
    """Affinely rescale every utility vector onto exactly [0, 1].

    Constant vectors become all-zeros. Relations without a utility vector are
    kept as is.
    """
    return inst.with_preferences({i: rel.normalized() for i, rel in inst.preferences.items()})


def rescale_unit(u: Sequence[float]) -> tuple[float, ...]:
    arr = np.asarray(u, dtype=float)
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return tuple(0.0 for _ in arr)
    return tuple(float(x) for x in (arr - lo) / (hi - lo))
