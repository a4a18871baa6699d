# main.py
"""
Command-line entry point.

Subcommands:
- solve INSTANCE            solve one instance, print the result as JSON
- validate INSTANCE SCHED   check a schedule, print violations
- generate                  build an instance from flags or a GenSpec file
- bench SPECS               generate + solve a batch, write a CSV, print group tables
- sweep INSTANCE            solve over a grid of turn-on / turn-off powers
- serve                     run the HTTP API under uvicorn

Exit codes: 0 Optimal/Feasible (or valid), 2 Infeasible (or invalid schedule),
3 TimedOut, 1 I/O and parse errors. Results go to stdout, logs to stderr.
"""
import argparse
import json
import re
import sys
from pathlib import Path
from typing import Any, List, Optional, Sequence

import structlog
import uvicorn
from pydantic import ValidationError

from config.settings import settings
from core.errors import SchedulingError
from core.logging import configure_logging
from models.instance import Instance, Schedule
from models.schemas import (
    DEFAULT_COST_RANGE,
    DEFAULT_PROC_TIMES,
    GenSpec,
    ProfileCosts,
    SearchConfig,
    SolveStatus,
    UniformCosts,
)
from services import bench
from services.bnb import solve
from services.evaluation import validate
from services.instgen import generate, resolve_group

logger = structlog.get_logger("cli")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_TIMEOUT = 3

_STATUS_EXIT = {
    SolveStatus.OPTIMAL: EXIT_OK,
    SolveStatus.FEASIBLE: EXIT_OK,
    SolveStatus.INFEASIBLE: EXIT_INFEASIBLE,
    SolveStatus.TIMED_OUT: EXIT_TIMEOUT,
}

_DURATION = re.compile(r"^\s*(\d+(?:\.\d*)?)\s*(ms|s|m|h)?\s*$")
_UNITS = {"ms": 0.001, "s": 1.0, "m": 60.0, "h": 3600.0, None: 1.0}


class CliError(Exception):
    """Input problem reported on stderr with exit code 1."""


def parse_duration(text: str) -> float:
    """Seconds from "250ms", "60s", "2m", "1h" or a plain number of seconds."""
    match = _DURATION.match(text)
    if not match:
        raise argparse.ArgumentTypeError(f"invalid duration {text!r}")
    return float(match.group(1)) * _UNITS[match.group(2)]


def _dump(payload: Any) -> str:
    return json.dumps(payload, separators=(",", ":"))


def _read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        field = ".".join(str(p) for p in err.get("loc", ())) or "<root>"
        parts.append(f"{field}: {err.get('msg', 'invalid')}")
    return "; ".join(parts)


def _load_instance(path: str) -> Instance:
    data = _read_json(path)
    try:
        return Instance.model_validate(data)
    except ValidationError as exc:
        raise CliError(f"{path}: {_describe(exc)}") from exc


def _write_text(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from exc


def _config(args: argparse.Namespace) -> SearchConfig:
    overrides = {
        "time_limit": args.time_limit,
        "node_limit": args.node_limit,
        "pack_budget": args.pack_budget,
    }
    if args.no_gcd:
        overrides["use_gcd"] = False
    if args.no_primal_pack:
        overrides["use_primal_packing"] = False
    if args.no_init:
        overrides["use_initial_heuristic"] = False
    return SearchConfig.from_settings(**overrides)


def _progress_logger(event) -> None:
    logger.info(
        "solve.progress",
        kind=event.kind,
        nodes=event.nodes,
        depth=event.depth,
        lb=None if event.lb is None else str(event.lb),
        ub=None if event.ub is None else str(event.ub),
    )


# subcommands

def cmd_solve(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    result = solve(instance, _config(args), progress=_progress_logger if args.verbose else None)
    print(_dump(result.to_payload(instance)))
    if args.out and result.schedule is not None:
        _write_text(args.out, json.dumps(result.schedule.to_payload(instance.diagram), indent=2))
    return _STATUS_EXIT[result.status]


def cmd_validate(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    data = _read_json(args.schedule)
    try:
        schedule = Schedule.from_payload(data, instance.diagram)
    except (ValidationError, ValueError, AttributeError) as exc:
        raise CliError(f"{args.schedule}: {exc}") from exc
    result = validate(instance, schedule)
    print(_dump(result.model_dump(mode="json")))
    return EXIT_OK if result.valid else EXIT_INFEASIBLE


def _spec_from_flags(args: argparse.Namespace) -> GenSpec:
    if args.profile:
        source = ProfileCosts(path=args.profile, offset=args.offset, wrap=args.wrap)
    else:
        lo, hi = (int(v) for v in args.cost_range.split(":"))
        source = UniformCosts(lo=lo, hi=hi)
    payload = {
        "n": args.n,
        "proc_time_set": resolve_group(args.group),
        "cost_source": source.model_dump(),
        "lambda": args.lam,
        "seed": args.seed,
    }
    if args.diagram:
        payload["diagram"] = _read_json(args.diagram)
    return GenSpec.model_validate(payload)


def cmd_generate(args: argparse.Namespace) -> int:
    try:
        spec = GenSpec.model_validate(_read_json(args.spec)) if args.spec else _spec_from_flags(args)
    except ValidationError as exc:
        raise CliError(_describe(exc)) from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    instance = generate(spec)
    _write_text(args.out, json.dumps(instance.to_payload(), indent=2))
    return EXIT_OK


def _load_specs(path: str) -> List[GenSpec]:
    source = Path(path)
    files = sorted(source.glob("*.json")) if source.is_dir() else [source]
    specs: List[GenSpec] = []
    for file in files:
        data = _read_json(str(file))
        items = data.get("specs", []) if isinstance(data, dict) and "specs" in data else data
        if isinstance(items, dict):
            items = [items]
        if not isinstance(items, list):
            raise CliError(f"{file}: expected a GenSpec object, a list of them or {{\"specs\": [...]}}")
        try:
            specs.extend(GenSpec.model_validate(item) for item in items)
        except ValidationError as exc:
            raise CliError(f"{file}: {_describe(exc)}") from exc
    return specs


def cmd_bench(args: argparse.Namespace) -> int:
    specs = bench.expand_repeats(_load_specs(args.specs), args.repeat)
    records = bench.run_bench(specs, _config(args), jobs=args.jobs or settings.BENCH_JOBS)
    if args.out:
        try:
            bench.write_records(records, args.out)
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc.strerror}") from exc
    else:
        sys.stdout.write(bench.records_frame(records).to_csv(index=False))
    if records:
        print(bench.aggregate(records).to_string(index=False))
        missed = bench.unsolved(records)
        if not missed.empty:
            print()
            print(missed.to_string(index=False))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    try:
        p_on = bench.parse_grid(args.p_on)
        p_off = bench.parse_grid(args.p_off)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    points = bench.run_sweep(instance, p_on, p_off, _config(args))
    if args.out:
        try:
            bench.write_sweep(points, args.out)
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc.strerror}") from exc
    else:
        rows = ["p_on,p_off,status,tec"] + [
            ",".join("" if v is None else str(v) for v in p.to_row().values()) for p in points
        ]
        print("\n".join(rows))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    uvicorn.run("api.app:app", host=args.host, port=args.port, reload=False)
    return EXIT_OK


# argument parsing

def _solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--time-limit", type=parse_duration, default=None, help="e.g. 0ms, 60s, 2m")
    parser.add_argument("--node-limit", type=int, default=None)
    parser.add_argument("--no-gcd", action="store_true", help="unit-job relaxation only")
    parser.add_argument("--no-primal-pack", action="store_true", help="disable the bin-packing heuristic")
    parser.add_argument("--no-init", action="store_true", help="skip the aggregated-jobs first incumbent")
    parser.add_argument("--pack-budget", type=parse_duration, default=None, help="per-call packing budget")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tou-sched", description="Energy-cost scheduling under time-of-use tariffs")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logs and search progress on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance")
    p.add_argument("instance")
    p.add_argument("--out", help="write the schedule JSON here")
    _solver_flags(p)
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser("validate", help="check a schedule against an instance")
    p.add_argument("instance")
    p.add_argument("schedule")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("generate", help="generate an instance")
    p.add_argument("--spec", help="GenSpec JSON file (flags below are ignored)")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--group", default=",".join(map(str, DEFAULT_PROC_TIMES)), help="processing-time set or preset name")
    p.add_argument("--lambda", dest="lam", default="1.3")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cost-range", default="%d:%d" % DEFAULT_COST_RANGE, help="LO:HI of uniform integer costs")
    p.add_argument("--profile", help="price CSV with idx,cost columns")
    p.add_argument("--offset", type=int, default=0)
    p.add_argument("--wrap", action="store_true")
    p.add_argument("--diagram", help="diagram JSON (default NOSBY)")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("bench", help="generate and solve a batch of instances")
    p.add_argument("specs", help="GenSpec JSON file or directory of them")
    p.add_argument("--out", help="CSV output (stdout when omitted)")
    p.add_argument("--repeat", type=int, default=1, help="run each spec over K consecutive seeds")
    p.add_argument("--jobs", type=int, default=None, help="worker processes")
    _solver_flags(p)
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("sweep", help="solve over a grid of turn-on/turn-off powers")
    p.add_argument("instance")
    p.add_argument("--p-on", required=True, help="LO:HI:STEPS for P[off,proc]")
    p.add_argument("--p-off", required=True, help="LO:HI:STEPS for P[proc,off]")
    p.add_argument("--out")
    _solver_flags(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--host", default="0.0.0.0")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(level="DEBUG" if args.verbose else None)
    try:
        return args.handler(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SchedulingError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return EXIT_ERROR
    except ValidationError as exc:
        print(f"error: {_describe(exc)}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
