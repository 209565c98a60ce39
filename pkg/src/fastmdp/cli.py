"""Command-line front end.

Exit codes: 0 success, 1 at least one request rejected or plan invalid,
2 usage, parse or configuration error.

Request files are JSON arrays of objects with ``aircraft_id``, ``source``,
``destination`` and optional ``requested_departure``. ``source`` and
``destination`` are 3-vectors or names of scenario vertiports.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .bench import bench_batch_scaling, bench_plan_scaling, write_bench_csv
from .domain import Scenario, load_scenario, validate_scenario
from .planstore import FlightPlan, PlanStore, PlanStoreError, load_store
from .scheduler import (
    PlanRequest,
    PlanResponse,
    initial_state,
    process_batch,
    process_request,
    validate_plan,
)
from .simulation import simulate_batch, write_trajectory_csv

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_USAGE = 2

log = logging.getLogger("fastmdp")


class UsageError(Exception):
    """Bad input files or arguments; maps to exit code 2."""


@dataclass(frozen=True)
class CliConfig:
    scenario_path: Path | None
    store_path: Path | None
    workers: int
    seed: int
    out_dir: Path
    verbose: int

    def violations(self) -> list[str]:
        out = []
        if self.workers < 1:
            out.append("--workers must be at least 1")
        if self.scenario_path is not None and not self.scenario_path.is_file():
            out.append(f"scenario file not found: {self.scenario_path}")
        return out


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("expected a non-empty list of non-negative integers")
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fastmdp", description="Risk-well trajectory solver and FCFS flight planner.")
    p.add_argument("--scenario", type=Path, help="scenario JSON (defaults built in when omitted)")
    p.add_argument("--store", type=Path, help="plan store file (JSON lines); in-memory when omitted")
    p.add_argument("--workers", type=int, default=1, help="valuation worker threads")
    p.add_argument("--seed", type=int, default=0, help="seed for synthetic benchmark traffic")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--verbose", "-v", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    for name, text in (
        ("plan", "process requests one at a time, first come first served"),
        ("batch", "co-simulate all requests as one batch"),
        ("simulate", "fly requests against the store without committing"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("requests", type=Path, help="JSON array of plan requests")

    bp = sub.add_parser("bench", help="step-rate benchmarks")
    bp.add_argument("mode", choices=("plans", "batch"))
    bp.add_argument("--counts", type=_int_list, default=[0, 100, 500], help="plan counts (plans mode)")
    bp.add_argument("--sizes", type=_int_list, default=[1, 5, 10, 20], help="batch sizes (batch mode)")
    bp.add_argument("--intruders", type=int, default=100, help="synthetic intruders (batch mode)")
    bp.add_argument("--steps", type=int, default=100)
    bp.add_argument("--warmup", type=int, default=50)

    sub.add_parser("validate", help="check the scenario and re-validate every stored plan in order")
    return p


def _resolve_point(value, scenario: Scenario, what: str) -> tuple[float, float, float]:
    if isinstance(value, str):
        if value not in scenario.vertiports:
            raise UsageError(f"unknown vertiport {value!r} in {what}")
        return scenario.vertiports[value]
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise UsageError(f"{what} must be a 3-vector or vertiport name")
    return tuple(float(v) for v in value)


def load_requests(path: Path, scenario: Scenario) -> list[PlanRequest]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read requests from {path}: {exc}") from exc
    if not isinstance(data, list):
        raise UsageError(f"{path}: expected a JSON array of requests")
    reqs = []
    for i, rec in enumerate(data):
        if not isinstance(rec, dict):
            raise UsageError(f"{path}[{i}]: request must be an object")
        try:
            req = PlanRequest(
                str(rec["aircraft_id"]),
                _resolve_point(rec["source"], scenario, "source"),
                _resolve_point(rec["destination"], scenario, "destination"),
                float(rec.get("requested_departure", 0.0)),
            )
        except (KeyError, TypeError, ValueError, UsageError) as exc:
            raise UsageError(f"{path}[{i}]: bad request: {exc}") from exc
        problems = req.violations(scenario)
        if problems:
            raise UsageError(f"{path}[{i}]: {'; '.join(problems)}")
        reqs.append(req)
    return reqs


def _load_inputs(cfg: CliConfig) -> tuple[Scenario, PlanStore]:
    problems = cfg.violations()
    if problems:
        raise UsageError("; ".join(problems))
    try:
        scenario = load_scenario(cfg.scenario_path) if cfg.scenario_path else Scenario()
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot load scenario: {exc}") from exc
    problems = validate_scenario(scenario)
    if problems:
        raise UsageError("invalid scenario: " + "; ".join(problems))
    try:
        store = load_store(cfg.store_path) if cfg.store_path else PlanStore()
    except (OSError, PlanStoreError) as exc:
        raise UsageError(f"cannot load store: {exc}") from exc
    return scenario, store


def _write_responses(responses: Sequence[PlanResponse], cfg: CliConfig) -> None:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    with open(cfg.out_dir / "responses.json", "w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in responses], fh, indent=2)
        fh.write("\n")
    for r in responses:
        if r.plan is not None:
            write_trajectory_csv([r.plan], cfg.out_dir / f"{r.plan.plan_id}.csv")


def _report(responses: Sequence[PlanResponse]) -> int:
    for r in responses:
        reason = f" ({r.rejection_reason.value})" if r.rejection_reason else ""
        plan = f" -> {r.plan.plan_id}" if r.plan else ""
        print(f"{r.request.aircraft_id}: {r.status.value}{reason}{plan}")
    return EXIT_OK if all(r.accepted for r in responses) else EXIT_REJECTED


def cmd_plan(cfg: CliConfig, requests: Path) -> int:
    scenario, store = _load_inputs(cfg)
    reqs = load_requests(requests, scenario)
    if not reqs:
        raise UsageError("request file is empty")
    responses = [process_request(r, store, scenario, cfg.workers) for r in reqs]
    _write_responses(responses, cfg)
    return _report(responses)


def cmd_batch(cfg: CliConfig, requests: Path) -> int:
    scenario, store = _load_inputs(cfg)
    reqs = load_requests(requests, scenario)
    if not reqs:
        raise UsageError("batch is empty")
    responses = process_batch(reqs, store, scenario, cfg.workers)
    _write_responses(responses, cfg)
    return _report(responses)


def cmd_simulate(cfg: CliConfig, requests: Path) -> int:
    scenario, store = _load_inputs(cfg)
    reqs = load_requests(requests, scenario)
    if not reqs:
        raise UsageError("request file is empty")
    outcome = simulate_batch(
        [initial_state(r, scenario) for r in reqs],
        [r.destination for r in reqs],
        store.snapshot(),
        scenario,
        aircraft_ids=[r.aircraft_id for r in reqs],
        workers=cfg.workers,
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(outcome.trajectories, cfg.out_dir / "trajectories.csv")
    summary = {
        "steps": outcome.step_count,
        "min_separation": outcome.min_separation_observed if outcome.separation_history else None,
        "aircraft": [
            {"aircraft_id": r.aircraft_id, "status": s.value, "nmac": n}
            for r, s, n in zip(reqs, outcome.statuses, outcome.nmac)
        ],
    }
    with open(cfg.out_dir / "simulation.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    for row in summary["aircraft"]:
        print(f"{row['aircraft_id']}: {row['status']}")
    return EXIT_OK


def cmd_bench(cfg: CliConfig, args: argparse.Namespace) -> int:
    problems = cfg.violations()
    if problems:
        raise UsageError("; ".join(problems))
    if args.steps < 1 or args.warmup < 0 or args.intruders < 0:
        raise UsageError("--steps must be positive; --warmup and --intruders non-negative")
    scenario, _ = _load_inputs(CliConfig(cfg.scenario_path, None, cfg.workers, cfg.seed, cfg.out_dir, cfg.verbose))
    if args.mode == "plans":
        records = bench_plan_scaling(
            args.counts, scenario, cfg.seed, args.steps, args.warmup, cfg.workers
        )
    else:
        if any(b < 1 for b in args.sizes):
            raise UsageError("batch sizes must be at least 1")
        records = bench_batch_scaling(
            args.sizes, scenario, args.intruders, cfg.seed, args.steps, args.warmup, cfg.workers
        )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / f"bench_{args.mode}.csv"
    write_bench_csv(records, path)
    for r in records:
        print(f"{r.param:>6d}  {r.hz:10.1f} Hz  {r.total_cycles_hz:10.1f} total")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_validate(cfg: CliConfig) -> int:
    scenario, store = _load_inputs(cfg)
    failures = 0
    earlier: list[FlightPlan] = []
    for plan in store.plans:
        result = validate_plan(plan, earlier, scenario.terrain_array, scenario)
        if not result.passed:
            failures += 1
            print(f"{plan.plan_id}: FAIL {'; '.join(result.problems)}")
        earlier.append(plan)
    print(f"{len(store)} plans checked, {failures} failed")
    return EXIT_OK if failures == 0 else EXIT_REJECTED


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    cfg = CliConfig(args.scenario, args.store, args.workers, args.seed, args.out, args.verbose)
    try:
        if args.command == "plan":
            return cmd_plan(cfg, args.requests)
        if args.command == "batch":
            return cmd_batch(cfg, args.requests)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.requests)
        if args.command == "bench":
            return cmd_bench(cfg, args)
        return cmd_validate(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, PlanStoreError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
