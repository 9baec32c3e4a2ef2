"""Command-line front end: ``dmrkit validate|analyze|enumerate|simulate|sweep``.

Exit codes: 0 success, 1 input error, 2 chain not irreducible.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .analysis import SingularSystem, compute_dmr
from .chain import StateBudgetExceeded, build_chain, default_max_states
from .model import ModelError, ValidationReport, load_task, validate_task
from .sim import EnumerationBudgetExceeded, enumerate_dmr_n, monte_carlo, monte_carlo_replications
from .supply import SupplyError, load_supply
from .sweep import load_sweep, rows_to_csv, run_sweep

EXIT_OK, EXIT_INPUT, EXIT_REDUCIBLE = 0, 1, 2
INPUT_ERRORS = (ModelError, SupplyError, OSError, StateBudgetExceeded, EnumerationBudgetExceeded)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _load(args):
    task = load_task(args.task)
    supply = load_supply(args.supply)
    return task, supply


def cmd_validate(args) -> int:
    report = ValidationReport()
    try:
        task = load_task(args.task)
        report.extend(validate_task(task))
        if args.supply:
            supply = load_supply(args.supply)
            report.extend(supply.validate(task.period))
    except INPUT_ERRORS as exc:
        report.add(str(exc))
    if args.pretty:
        if report.ok:
            print("valid")
        for v in report.violations:
            print(f"- {v}")
    else:
        sys.stdout.write(_dump(report.to_dict()))
    return EXIT_OK if report.ok else EXIT_INPUT


def cmd_analyze(args) -> int:
    task, supply = _load(args)
    chain = build_chain(
        task,
        supply,
        max_states=args.max_states or default_max_states(),
        conservative_backlog=args.conservative_backlog,
    )
    if args.dot:
        Path(args.dot).write_text(chain.to_dot(), encoding="utf-8")
    if args.chain_json:
        Path(args.chain_json).write_text(_dump(chain.to_dict()), encoding="utf-8")
    result = compute_dmr(chain, method=args.method)
    if args.out:
        Path(args.out).write_text(_dump(result.to_dict()), encoding="utf-8")
    print(result.summary())
    if args.pretty:
        print(f"states: {len(chain)}, strongly connected components: {result.scc_count}")
        for line in result.diagnostics:
            print(f"  {line}")
    return EXIT_OK if result.irreducible else EXIT_REDUCIBLE


def cmd_enumerate(args) -> int:
    task, supply = _load(args)
    dist = enumerate_dmr_n(
        task, supply, args.n, mode=args.mode, budget=args.budget,
        conservative_backlog=args.conservative_backlog,
    )
    if args.pretty:
        text = f"DMR_{dist.n} distribution (mean {dist.mean()} ~{float(dist.mean()):.5f})\n"
        text += "".join(f"  P(DMR_{dist.n} = {v}) = {p}\n" for v, p in dist.points)
    else:
        text = dist.to_csv()
    _emit(text, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    task, supply = _load(args)
    if args.replications > 1:
        reports = monte_carlo_replications(task, supply, args.n, args.seed, args.replications, args.jobs)
    else:
        reports = [monte_carlo(task, supply, args.n, args.seed)]
    if args.pretty:
        text = "".join(
            f"seed {r.seed}: {r.misses}/{r.n_jobs} misses, DMR ~ {r.empirical_dmr:.6f} "
            f"(± {r.stderr():.6f})\n"
            for r in reports
        )
    elif len(reports) == 1:
        text = _dump(reports[0].to_dict())
    else:
        text = _dump([r.to_dict() for r in reports])
    _emit(text, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = load_sweep(args.sweep)
    if args.max_states:
        spec = dataclasses.replace(spec, max_states=args.max_states)
    rows = run_sweep(spec, workers=args.jobs, timing=args.timing)
    if args.pretty:
        text = "".join(
            f"{spec.axis}={r['axis_value']:>6}  DMR={r['dmr_rational'] or '-':>24}  "
            f"~{r['dmr_float'] or '-':<14} states={r['n_states']}  {r['status']}\n"
            for r in rows
        )
    else:
        text = rows_to_csv(rows)
    _emit(text, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmrkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario(p):
        p.add_argument("task", help="task JSON document")
        p.add_argument("supply", help="supply JSON document")
        p.add_argument("--pretty", action="store_true", help="human-readable output")

    p = sub.add_parser("validate", help="check a task (and optionally a supply) document")
    p.add_argument("task")
    p.add_argument("supply", nargs="?")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="build the chain and compute the DMR")
    scenario(p)
    p.add_argument("--out", help="write the analysis result JSON here")
    p.add_argument("--dot", help="write the chain in DOT format here")
    p.add_argument("--chain-json", help="write the chain as JSON here")
    p.add_argument("--max-states", type=int)
    p.add_argument("--conservative-backlog", action="store_true")
    p.add_argument("--method", default="auto", choices=["auto", "gth", "bareiss", "power"])
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("enumerate", help="exact distribution of DMR_n as CSV")
    scenario(p)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--mode", default="auto", choices=["auto", "direct", "dp"])
    p.add_argument("--budget", type=int, default=10**6)
    p.add_argument("--conservative-backlog", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("simulate", help="Monte Carlo simulation of the server")
    scenario(p)
    p.add_argument("-n", type=int, required=True, help="number of jobs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="DMR over a range of deadline, dismiss offset or p")
    p.add_argument("sweep", help="sweep JSON document")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--timing", action="store_true", help="record build/solve wall time")
    p.add_argument("--max-states", type=int)
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (*INPUT_ERRORS, SingularSystem) as exc:
        print(f"dmrkit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
