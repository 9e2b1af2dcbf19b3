"""Random instances and policies for property checks and the containment experiment."""

from __future__ import annotations

import numpy as np

from piif.core import Allocation, Instance, Policy, make_instance
from piif.preferences import ExpectedUtility, StochasticDominance, TrivialReflexive


def random_metric(rng: np.random.Generator, n: int, levels: int | None = None) -> np.ndarray:
    """Symmetric zero-diagonal matrix in [0, 1]; ``levels`` rounds entries to a coarse grid."""
    d = rng.random((n, n))
    d = (d + d.T) / 2
    if levels:
        d = np.round(d * levels) / levels
    np.fill_diagonal(d, 0.0)
    return d


def random_utilities(rng: np.random.Generator, n: int, k: int, levels: int | None = None) -> np.ndarray:
    u = rng.random((n, k))
    return np.round(u * levels) / levels if levels else u


def random_instance(
    rng: np.random.Generator,
    n: int,
    k: int,
    *,
    preference: str = "eu",
    multitask: bool = False,
    coarse: bool = False,
) -> Instance:
    """A uniform-random instance.

    ``preference`` is ``"eu"``, ``"sd"``, ``"mixed"`` (EU, SD and trivial
    relations). ``coarse`` rounds utilities and distances so that ties and
    distances 0 and 1 occur often.
    """
    u = random_utilities(rng, n, k, 4 if coarse else None)
    if multitask:
        metric = np.stack([random_metric(rng, n, 4 if coarse else None) for _ in range(k)])
    else:
        metric = random_metric(rng, n, 4 if coarse else None)
    if preference == "eu":
        prefs = [ExpectedUtility(row) for row in u]
    elif preference == "sd":
        prefs = [StochasticDominance(row, 1.0) for row in u]
    elif preference == "mixed":
        kinds = rng.integers(0, 3, size=n)
        prefs = [
            ExpectedUtility(row) if c == 0 else StochasticDominance(row, 1.0) if c == 1 else TrivialReflexive()
            for row, c in zip(u, kinds)
        ]
    else:
        raise ValueError(f"unknown preference mix {preference!r}")
    return make_instance(None, metric, preferences=prefs, outcome_labels=[f"c{c}" for c in range(k)])


def random_policy(rng: np.random.Generator, inst: Instance, style: str | None = None) -> Policy:
    """A random policy; ``style`` picks the generating scheme, chosen at random if omitted.

    ``dirichlet``: independent uniform allocations. ``deterministic``: random
    point masses. ``near_constant``: one shared allocation plus small noise, so
    IF often holds. ``favorites``: everyone's top outcome, so EF holds.
    """
    n, k = inst.n_individuals, inst.n_outcomes
    style = style or str(rng.choice(["dirichlet", "deterministic", "near_constant", "favorites"]))
    if style == "dirichlet":
        rows = rng.dirichlet(np.ones(k), size=n)
    elif style == "deterministic":
        rows = np.eye(k)[rng.integers(0, k, size=n)]
    elif style == "near_constant":
        base = rng.dirichlet(np.ones(k))
        rows = np.array([(1 - s) * base + s * rng.dirichlet(np.ones(k)) for s in rng.random(n) * 0.3])
    elif style == "favorites":
        rows = np.zeros((n, k))
        for i, rel in inst.preferences.items():
            favorite = int(np.argmax(rel.utility())) if not isinstance(rel, TrivialReflexive) else 0
            rows[i, favorite] = 1.0
    else:
        raise ValueError(f"unknown policy style {style!r}")
    return Policy({i: Allocation.from_solver(row) for i, row in enumerate(rows)})


def random_binary_instance(rng: np.random.Generator, n: int, min_gap: float = 0.2) -> tuple[Instance, float]:
    """Two outcomes with utilities in [0, 1] whose gap is at least ``min_gap``.

    Returns the instance and the reverse-Lipschitz constant ``1 / min gap``:
    on two outcomes ``|u(p) - u(q)| = |u_0 - u_1| * TV(p, q)``.
    """
    rows = []
    for _ in range(n):
        gap = rng.uniform(min_gap, 1.0)
        low = rng.uniform(0.0, 1.0 - gap)
        rows.append([low + gap, low] if rng.random() < 0.5 else [low, low + gap])
    u = np.array(rows)
    lip = float(1.0 / np.abs(u[:, 0] - u[:, 1]).min())
    return make_instance(u, random_metric(rng, n, 4 if rng.random() < 0.5 else None)), lip
