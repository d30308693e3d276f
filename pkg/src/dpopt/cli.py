"""Command line driver.

Verbs: optimize, sweep, check-rules, bench-list, emit. Exit codes: 0 on
success, 1 for usage errors, 2 for a phase failure, 3 when the equivalence
check finds a counterexample.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import benchmarks, rules as rules_mod
from .cost import CostConfig
from .egraph import RunLimits
from .ir import IrError
from .netlist import emit_netlist
from .pipeline import (PhaseError, RunConfig, SweepSpec, artifacts_json, run_pipeline,
                       run_sweep, sweep_json)
from .sexpr import DesignParseError, parse_design, print_design
from .verify import check_rule_soundness

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PHASE = 2
EXIT_NOT_EQUIVALENT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="design file (s-expression format)")
    src.add_argument("--bench", help="benchmark name (see bench-list)")
    p.add_argument("--rules", help="comma-separated rule classes "
                                   f"({','.join(rules_mod.RULE_CLASSES)})")
    p.add_argument("--drop-rules",
                   help="comma-separated rule names to exclude ('' drops none)")
    p.add_argument("--iters", type=int, default=10, help="max rewrite iterations")
    p.add_argument("--node-limit", type=int, default=100_000)
    p.add_argument("--time-budget-ms", type=int, default=60_000)
    p.add_argument("--extract", choices=("greedy", "ilp"), default="greedy")
    p.add_argument("--ilp-budget-ms", type=int, default=100_000)
    p.add_argument("--check", choices=("auto", "exhaustive", "sampled", "none"),
                   default="auto")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--cost-config", help="key=value cost constants file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit", choices=("sexpr", "netlist", "json"), default="sexpr")
    p.add_argument("--out", help="write the optimized design here (default stdout)")
    p.add_argument("--report", help="write the JSON run report here")


def _config_from(args) -> RunConfig:
    classes = None
    if args.rules is not None:
        names = [c.strip() for c in args.rules.split(",") if c.strip()]
        classes = frozenset(names)
        unknown = classes - set(rules_mod.RULE_CLASSES)
        if unknown:
            raise ValueError(f"unknown rule classes: {sorted(unknown)}")
    if args.bench is not None and args.bench not in benchmarks.REGISTRY:
        raise KeyError(f"unknown benchmark {args.bench!r}; see bench-list")
    drops = None
    if args.drop_rules is not None:
        drops = frozenset(n.strip() for n in args.drop_rules.split(",") if n.strip())
        known = {r.name for r in rules_mod.rule_table()}
        if drops - known:
            raise ValueError(f"unknown rules: {sorted(drops - known)}")
    cost_cfg = CostConfig.from_file(args.cost_config) if args.cost_config else CostConfig()
    return RunConfig(
        input_path=args.input, bench=args.bench,
        rule_classes=classes, drop_rules=drops,
        limits=RunLimits(args.iters, args.node_limit, args.time_budget_ms),
        extract_backend=args.extract, ilp_budget_ms=args.ilp_budget_ms,
        check_mode=args.check, sample_count=args.samples,
        cost_config=cost_cfg, seed=args.seed, emit_format=args.emit)


def _write(path: str | None, text: str) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_design(artifacts, fmt: str) -> str:
    if fmt == "netlist":
        return emit_netlist(artifacts.optimized)
    if fmt == "json":
        return json.dumps(artifacts_json(artifacts), indent=2, sort_keys=True) + "\n"
    return print_design(artifacts.optimized) + "\n"


def _cmd_optimize(args) -> int:
    cfg = _config_from(args)
    artifacts = run_pipeline(cfg)
    _write(args.out, _emit_design(artifacts, args.emit))
    if args.report:
        _write(args.report, json.dumps(artifacts_json(artifacts), indent=2,
                                       sort_keys=True) + "\n")
    if artifacts.verdict is not None and artifacts.verdict.status != "equivalent":
        print(f"equivalence FAILED: {artifacts.verdict.counterexample}", file=sys.stderr)
        return EXIT_NOT_EQUIVALENT
    return EXIT_OK


def _cmd_sweep(args) -> int:
    try:
        start, stop, step = (int(v) for v in args.range.split(":"))
    except ValueError:
        raise ValueError("--range expects START:STOP:STEP") from None
    base = _config_from(args)
    spec = SweepSpec(bench=args.bench, start=start, stop=stop, step=step,
                     base=base, param=args.param)
    rows = sweep_json(run_sweep(spec))
    text = json.dumps(rows, indent=2, sort_keys=True) + "\n"
    _write(args.out, text)
    if args.report and args.report != args.out:
        _write(args.report, text)
    if any("error" in row for row in rows):
        return EXIT_PHASE
    return EXIT_OK


def _cmd_check_rules(args) -> int:
    failures = 0
    reports = []
    for rule in rules_mod.rule_table():
        rep = check_rule_soundness(rule, args.max_width, args.bit_budget)
        reports.append(rep.to_json())
        status = "ok" if rep.ok else "FAIL"
        print(f"{rule.name:28s} {status:4s} tried={rep.assignments_tried} "
              f"checked={rep.assignments_satisfied} skipped={rep.assignments_skipped}")
        if not rep.ok:
            failures += 1
    if args.report:
        _write(args.report, json.dumps(reports, indent=2, sort_keys=True) + "\n")
    return EXIT_PHASE if failures else EXIT_OK


def _cmd_bench_list(_args) -> int:
    for name in sorted(benchmarks.REGISTRY):
        entry = benchmarks.REGISTRY[name]
        print(f"{name:18s} param={entry.param:6s} {entry.description}")
    return EXIT_OK


def _cmd_emit(args) -> int:
    if args.input:
        with open(args.input, encoding="utf-8") as fh:
            design = parse_design(fh.read())
    else:
        design = benchmarks.benchmark(args.bench)
    text = emit_netlist(design) if args.emit == "netlist" else print_design(design) + "\n"
    _write(args.out, text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="dpopt", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", parents=[], help="optimize a design")
    _add_common(p)
    p.set_defaults(fn=_cmd_optimize)

    p = sub.add_parser("sweep", help="optimize a benchmark across widths")
    _add_common(p)
    p.add_argument("--range", required=True, help="START:STOP:STEP width range")
    p.add_argument("--param", help="parameter name (defaults to the benchmark's)")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("check-rules", help="replay the rule soundness suite")
    p.add_argument("--max-width", type=int, default=4)
    p.add_argument("--bit-budget", type=int, default=16)
    p.add_argument("--report", help="write JSON reports here")
    p.set_defaults(fn=_cmd_check_rules)

    p = sub.add_parser("bench-list", help="list built-in benchmarks")
    p.set_defaults(fn=_cmd_bench_list)

    p = sub.add_parser("emit", help="parse and re-emit a design without optimizing")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input")
    src.add_argument("--bench")
    p.add_argument("--emit", choices=("sexpr", "netlist"), default="sexpr")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_emit)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.fn(args)
    except (DesignParseError, IrError, OSError, PhaseError) as exc:
        print(f"dpopt: {exc}", file=sys.stderr)
        return EXIT_PHASE
    except (ValueError, KeyError) as exc:
        print(f"dpopt: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
