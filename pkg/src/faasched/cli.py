"""Command-line harness: generate, dagify, simulate, sweep, report, validate.

Exit codes: 0 ok, 2 usage, 3 I/O, 4 infeasible instance, 5 validation failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .engine import simulate
from .errors import IncompleteGroup, InfeasibleInstance, NotAChain, ParseError, ValidationError
from .metrics import mean_latency, percentile_latency, validate_schedule
from .model import ClusterConfig, PolicyConfig, validate_instance
from .state import SimResult
from .sweep import DIMENSIONS, PRESETS, SweepSpec, format_mean, format_report, read_rows, report_rows, run_sweep
from .workload import GenParams, dagify_instance, generate_chain_instance, read_instance, write_instance

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INFEASIBLE, EXIT_INVALID = 0, 2, 3, 4, 5

log = logging.getLogger("faasched")


class UsageError(Exception):
    pass


def _range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"MIN > MAX in {text!r}")
    return lo, hi


def _policy(text: str) -> PolicyConfig:
    try:
        return PolicyConfig.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def cmd_generate(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    for i in range(args.count):
        seed = args.seed + i
        params = GenParams(
            n=args.tasks, n_f=args.families, setup_range=args.setup, chain_range=args.chain, seed=seed
        )
        try:
            inst = generate_chain_instance(params)
        except Exception as exc:
            raise UsageError(str(exc)) from None
        tag = "chain"
        if args.dag:
            # sub-seed keeps the dag draw independent of the chain draw
            inst = dagify_instance(inst, seed * 7919 + 1)
            tag = "dag"
        path = os.path.join(args.out, f"{tag}_{params.tag}.json")
        write_instance(inst, path)
        print(f"{path} n={inst.n_tasks} N={inst.n_jobs} n_f={inst.n_families}")
    return EXIT_OK


def cmd_dagify(args) -> int:
    inst = read_instance(args.in_path)
    try:
        dag = dagify_instance(inst, args.seed)
    except NotAChain as exc:
        raise UsageError(str(exc)) from None
    write_instance(dag, args.out)
    print(f"{args.out} n={dag.n_tasks} N={dag.n_jobs} n_f={dag.n_families}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    inst = read_instance(args.in_path)
    cluster = ClusterConfig(args.machines, args.capacity)
    result = simulate(inst, cluster, args.policy, seed=args.seed)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(result.to_json())
    print(f"mean={format_mean(mean_latency(result))} p95={percentile_latency(result, 95)}")
    if args.validate:
        problems = validate_schedule(inst, cluster, result)
        for p in problems:
            print(f"violation: {p}", file=sys.stderr)
        if problems:
            return EXIT_INVALID
    return EXIT_OK


def _load_spec(args) -> SweepSpec:
    if args.spec and args.preset:
        raise UsageError("use either --spec or --preset")
    if args.preset:
        if args.preset not in PRESETS:
            raise UsageError(f"unknown preset {args.preset!r}; known: {sorted(PRESETS)}")
        return PRESETS[args.preset]
    if not args.spec:
        raise UsageError("sweep needs --spec PATH or --preset NAME")
    try:
        return SweepSpec.load(args.spec)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad sweep spec: {exc}") from None


def cmd_sweep(args) -> int:
    spec = _load_spec(args)
    print(f"sweep: {spec.total_runs} runs", file=sys.stderr)

    def progress(k):
        if k % 100 == 0:
            print(f"  {k} runs done", file=sys.stderr)

    outcome = run_sweep(spec, args.out, jobs=max(1, args.jobs), progress=progress)
    print(f"sweep: executed {outcome.executed}, skipped {outcome.skipped}, failed {len(outcome.errors)}", file=sys.stderr)
    print(args.out)
    return EXIT_INVALID if outcome.errors else EXIT_OK


def cmd_report(args) -> int:
    rows = read_rows(args.in_path)
    if not rows and not os.path.exists(args.in_path):
        raise FileNotFoundError(args.in_path)
    try:
        text = format_report(report_rows(rows, args.vary))
    except IncompleteGroup as exc:
        print(f"incomplete group: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        inst = read_instance(args.in_path)
    except ValidationError as exc:
        for v in exc.violations:
            print(f"violation: {v}")
        return EXIT_INVALID
    problems = list(validate_instance(inst))
    if args.result:
        with open(args.result, encoding="utf-8") as fh:
            result = SimResult.from_json(fh.read())
        cluster = ClusterConfig(args.machines or result.machines, args.capacity or result.capacity)
        problems += validate_schedule(inst, cluster, result)
    for v in problems:
        print(f"violation: {v}")
    if problems:
        return EXIT_INVALID
    print("ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="faasched", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate synthetic chain (or out-tree) instances")
    p.add_argument("--families", type=int, required=True)
    p.add_argument("--setup", type=_range, required=True, metavar="MIN:MAX")
    p.add_argument("--chain", type=_range, required=True, metavar="MIN:MAX")
    p.add_argument("--tasks", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--dag", action="store_true")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("dagify", help="turn a chain instance into out-trees")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_dagify)

    p = sub.add_parser("simulate", help="simulate one policy on one instance")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--machines", type=int, required=True)
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--policy", type=_policy, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--validate", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a grid of simulations into an aggregate CSV")
    p.add_argument("--spec")
    p.add_argument("--preset")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="relative-performance box statistics from a sweep CSV")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--vary", choices=DIMENSIONS, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate", help="check an instance file, and optionally a result against it")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--result")
    p.add_argument("--machines", type=int)
    p.add_argument("--capacity", type=int)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleInstance as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, ParseError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
