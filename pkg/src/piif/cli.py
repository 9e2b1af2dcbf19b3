"""Command-line front end: ``piif audit | optimize | generate | experiment``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from piif import io as pio
from piif.audit import AUDITS, MultiTaskInstance, NotNormalized, SingleTaskInstance, audit
from piif.core import TOL, ValidationError
from piif.experiments import EXPERIMENTS, to_csv, to_markdown
from piif.generators import GENERATORS, GeneratorSpec, generate
from piif.lpcore import Status
from piif.optimizer import Family, Objective, check_result, optimize
from piif.preferences import WrongVariant
from piif.testing import random_instance, random_policy

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION, EXIT_ITERATION_LIMIT = 0, 1, 2, 3

USER_ERRORS = (
    ValidationError,
    WrongVariant,
    MultiTaskInstance,
    SingleTaskInstance,
    NotNormalized,
    KeyError,
    ValueError,
    OSError,
    json.JSONDecodeError,
)


def cmd_audit(args: argparse.Namespace) -> int:
    inst = pio.load_instance(args.instance)
    pi = pio.load_policy(args.policy)
    report = audit(inst, pi, args.notion, tol=args.tol)
    if args.format == "json":
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(f"{args.notion}: {'satisfied' if report.overall else 'violated'}")
        for v in report.violations:
            a, b = inst.individuals[v.i].label, inst.individuals[v.j].label
            print(f"  ({a}, {b}) {v.violation.kind}: lhs={v.violation.lhs:.6f} rhs={v.violation.rhs:.6f}")
    return EXIT_OK if report.overall else EXIT_VIOLATION


def _load_objective(spec: str, inst) -> Objective:
    if spec == "welfare":
        return Objective.social_welfare(inst)
    return pio.objective_from_dict(pio.read_json(spec))


def cmd_optimize(args: argparse.Namespace) -> int:
    inst = pio.load_instance(args.instance)
    obj = _load_objective(args.objective, inst)
    result = optimize(inst, obj, args.family)
    if result.status is Status.ITERATION_LIMIT:
        print("solver hit its iteration limit", file=sys.stderr)
        return EXIT_ITERATION_LIMIT
    if not check_result(inst, result, tol=args.tol):
        print(f"optimized policy failed its own {args.family} audit", file=sys.stderr)
        return EXIT_ERROR
    pio.write_json(args.out, result.to_dict())
    print(f"{args.family}: objective {result.objective_value:.6f}")
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    params = {k: v for k, v in (("n", args.n), ("t", args.t), ("k", args.k), ("eps", args.eps)) if v is not None}
    inst, policies = generate(GeneratorSpec(args.name, params))
    pio.save_instance(args.out, inst)
    if args.policies_out:
        out = Path(args.policies_out)
        for name, pi in policies.items():
            pio.save_policy(out / f"{name}.json", pi)
        if args.name == "decision-maker-conflict":
            _, obj = GENERATORS[args.name](**params)
            pio.write_json(out / "objective.json", pio.objective_to_dict(obj))
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    kwargs = {}
    if args.name == "gaps-single" and args.n is not None:
        kwargs["n"] = args.n
    if args.name == "gaps-multitask":
        kwargs.update({k: v for k, v in (("n", args.n), ("t", args.t)) if v is not None})
    if args.name == "containments":
        kwargs["seed"] = args.seed
        if args.samples is not None:
            kwargs["samples"] = args.samples
    result = EXPERIMENTS[args.name](**kwargs)
    md = to_markdown(result.rows)
    print(md, end="")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{result.name}.csv").write_text(to_csv(result.rows), encoding="utf-8")
        (out / f"{result.name}.md").write_text(md, encoding="utf-8")
        for name, inst in result.instances.items():
            pio.save_instance(out / f"{name}.json", inst)
        for name, pi in result.policies.items():
            pio.save_policy(out / f"{name}.policy.json", pi)
    return EXIT_OK if result.all_passed else EXIT_VIOLATION


def cmd_testgen(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    out = Path(args.out_dir)
    for s in range(args.count):
        inst = random_instance(rng, int(rng.integers(2, 5)), int(rng.integers(2, 5)), coarse=bool(s % 2))
        pio.save_instance(out / f"instance-{s:03d}.json", inst)
        pio.save_policy(out / f"policy-{s:03d}.json", random_policy(rng, inst))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="piif", description="Audit and optimize preference-informed fair policies.")
    parser.add_argument("--tol", type=float, default=TOL, help="numerical tolerance for audits")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized corpora")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{audit,optimize,generate,experiment}")

    p = sub.add_parser("audit", help="check a policy against a fairness notion")
    p.add_argument("--instance", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--notion", required=True, choices=[n.value for n in AUDITS])
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("optimize", help="optimize an objective over a policy family")
    p.add_argument("--instance", required=True)
    p.add_argument("--family", required=True, choices=[f.value for f in Family])
    p.add_argument("--objective", default="welfare", help="'welfare' or a JSON file with a weight matrix")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("generate", help="write a named instance family")
    p.add_argument("name", choices=sorted(GENERATORS))
    p.add_argument("--n", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--policies-out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("experiment", help="run a reproduction experiment and print its report")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    p.add_argument("--n", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_experiment)

    # hidden: no help entry
    p = sub.add_parser("testgen")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_testgen)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; this tool reserves 2 for violations
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    try:
        return args.func(args)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
