"""JSON reading and writing for instances, policies, classifiers and results."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from piif.core import Allocation, Divergence, Individual, Instance, Metric, Outcome, Policy, ValidationError
from piif.groupfair import BinaryClassifier, GroupSpec
from piif.lpcore import Sense
from piif.optimizer import Objective
from piif.preferences import (
    BinaryRanking,
    ExpectedUtility,
    PreferenceRelation,
    StochasticDominance,
    TrivialReflexive,
)


def preference_to_dict(rel: PreferenceRelation) -> dict[str, Any]:
    if isinstance(rel, ExpectedUtility):
        return {"type": "expected_utility", "u": list(rel.u)}
    if isinstance(rel, StochasticDominance):
        return {"type": "stochastic_dominance", "u": list(rel.u), "M": rel.M}
    if isinstance(rel, TrivialReflexive):
        return {"type": "trivial"}
    if isinstance(rel, BinaryRanking):
        return {"type": "binary_ranking", "favored": rel.favored}
    raise ValidationError(f"cannot serialize preference {rel!r}")


def preference_from_dict(data: Mapping[str, Any]) -> PreferenceRelation:
    kind = data.get("type")
    if kind == "expected_utility":
        return ExpectedUtility(data["u"])
    if kind == "stochastic_dominance":
        return StochasticDominance(data["u"], data.get("M"))
    if kind == "trivial":
        return TrivialReflexive()
    if kind == "binary_ranking":
        return BinaryRanking(int(data["favored"]))
    raise ValidationError(f"unknown preference type {kind!r}")


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    out: dict[str, Any] = {
        "outcomes": [{"id": o.id, "label": o.label} for o in inst.outcomes],
        "individuals": [{"id": x.id, "label": x.label, "weight": x.weight} for x in inst.individuals],
        "metrics": [m.dist.tolist() for m in inst.metrics],
        "divergence": inst.divergence.value,
        "preferences": {str(i): preference_to_dict(rel) for i, rel in inst.preferences.items()},
    }
    if inst.name:
        out["name"] = inst.name
    return out


def instance_from_dict(data: Mapping[str, Any]) -> Instance:
    try:
        return Instance(
            outcomes=tuple(Outcome(int(o["id"]), str(o["label"])) for o in data["outcomes"]),
            individuals=tuple(
                Individual(int(x["id"]), str(x["label"]), float(x.get("weight", 1.0))) for x in data["individuals"]
            ),
            metrics=tuple(Metric(np.asarray(m, dtype=float)) for m in data["metrics"]),
            preferences={int(i): preference_from_dict(p) for i, p in data["preferences"].items()},
            divergence=Divergence(data.get("divergence", "tv")),
            name=str(data.get("name", "")),
        )
    except KeyError as exc:
        raise ValidationError(f"instance JSON is missing field {exc.args[0]!r}") from exc


def policy_to_dict(pi: Policy) -> dict[str, Any]:
    return {"alloc": {str(i): list(a.probs) for i, a in pi.alloc.items()}}


def policy_from_dict(data: Mapping[str, Any]) -> Policy:
    if "alloc" not in data:
        raise ValidationError("policy JSON needs an 'alloc' field")
    return Policy({int(i): Allocation(p) for i, p in data["alloc"].items()})


def classifier_from_dict(data: Mapping[str, Any]) -> BinaryClassifier:
    return BinaryClassifier({int(i): int(v) for i, v in data["labels"].items()})


def group_from_dict(data: Mapping[str, Any]) -> GroupSpec:
    return GroupSpec(int(i) for i in data["S"])


def objective_to_dict(obj: Objective) -> dict[str, Any]:
    return {"weights": obj.weights.tolist(), "sense": obj.sense.value}


def objective_from_dict(data: Mapping[str, Any]) -> Objective:
    return Objective.custom(data["weights"], Sense(data.get("sense", "maximize")))


def read_json(path: str | Path) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_json(path: str | Path, data: Any) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=False)
        fh.write("\n")


def load_instance(path: str | Path) -> Instance:
    return instance_from_dict(read_json(path))


def load_policy(path: str | Path) -> Policy:
    return policy_from_dict(read_json(path))


def save_instance(path: str | Path, inst: Instance) -> None:
    write_json(path, instance_to_dict(inst))


def save_policy(path: str | Path, pi: Policy) -> None:
    write_json(path, policy_to_dict(pi))
