"""Command-line orchestration: plan, sweep, simulate, compare, export.

Emits figure-ready CSV/JSON tables; no plotting.  Every command honors
--seed and produces byte-identical output for identical inputs.
"""

import argparse
import json
import sys
from dataclasses import asdict, dataclass

from . import milp as milp_mod
from .ingest import (
    ExperimentConfig,
    ParseError,
    SyntheticFleetSpec,
    fleet_to_csv,
    gen_synthetic_fleet,
    load_config,
)
from .model import Fleet, TaskSpec
from .optimizer import (
    STATIC_ROUNDING_MODES,
    baseline_myopic,
    baseline_onenode,
    baseline_static,
    inflate_plan,
    k_sweep,
    solve_exact,
)
from .simulator import run_replications

METHODS = ("optimal", "myopic", "onenode", "static")

REPORT_COLUMNS = (
    "task_id",
    "D",
    "method",
    "k",
    "n",
    "expected_T",
    "sim_mean",
    "sim_std",
    "sim_p50",
    "sim_p90",
    "sim_p99",
)
SHARE_COLUMNS = (
    "task_id",
    "method",
    "node_id",
    "comm_share",
    "det_comp_share",
    "stoch_comp_share",
)


@dataclass(frozen=True)
class ReportRow:
    task_id: str
    D: float
    method: str
    k: int
    n: int
    expected_T: float
    sim_mean: float
    sim_std: float
    sim_p50: float
    sim_p90: float
    sim_p99: float


@dataclass(frozen=True)
class ShareRow:
    task_id: str
    method: str
    node_id: str
    comm_share: float
    det_comp_share: float
    stoch_comp_share: float


@dataclass(frozen=True)
class Report:
    rows: tuple[ReportRow, ...]
    node_shares: tuple[ShareRow, ...]


def _solve(method: str, fleet: Fleet, D: float, config: ExperimentConfig):
    if method == "optimal":
        return solve_exact(fleet, D)
    if method == "myopic":
        return baseline_myopic(fleet, D)
    if method == "onenode":
        return baseline_onenode(fleet, D)
    if method == "static":
        return baseline_static(fleet, D, rounding=config.static_rounding)
    raise ValueError(f"unknown method {method!r}")


def run_compare(config: ExperimentConfig) -> Report:
    """Plan every task with all four methods and simulate each plan."""
    fleet = config.load_fleet()
    tasks = config.load_tasks()
    rows: list[ReportRow] = []
    shares: list[ShareRow] = []
    for task in tasks:
        for method in METHODS:
            try:
                plan = _solve(method, fleet, task.size, config)
                plan = inflate_plan(fleet, plan, task.size, config.n_extra)
                stats = run_replications(
                    fleet,
                    plan,
                    task.size,
                    reps=config.replications,
                    seed=config.seed,
                    workers=config.workers,
                )
            except ValueError as exc:
                raise ValueError(f"task {task.id!r} ({method}): {exc}") from exc
            rows.append(
                ReportRow(
                    task_id=task.id,
                    D=task.size,
                    method=method,
                    k=plan.k,
                    n=plan.n,
                    expected_T=plan.expected_T,
                    sim_mean=stats.mean,
                    sim_std=stats.std,
                    sim_p50=stats.p50,
                    sim_p90=stats.p90,
                    sim_p99=stats.p99,
                )
            )
            shares += [
                ShareRow(
                    task_id=task.id,
                    method=method,
                    node_id=ns.node_id,
                    comm_share=ns.comm,
                    det_comp_share=ns.det_comp,
                    stoch_comp_share=ns.stoch_comp,
                )
                for ns in stats.node_shares
            ]
    return Report(rows=tuple(rows), node_shares=tuple(shares))


def run_sweep(config: ExperimentConfig, task: TaskSpec) -> list[dict]:
    """Best objective and selection for every k, for one task."""
    fleet = config.load_fleet()
    return [
        {
            "k": rec.k,
            "best_T": rec.best_T,
            "selection": ";".join(rec.selection),
        }
        for rec in k_sweep(fleet, task.size)
    ]


def run_export_milp(
    config: ExperimentConfig, task: TaskSpec, path: str, lp_path: str | None = None
) -> dict:
    """Write the task's MILP as MPS (and optionally LP); return counts."""
    fleet = config.load_fleet()
    model = milp_mod.build_milp(fleet, task.size)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(milp_mod.export_mps(model))
    if lp_path:
        with open(lp_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(milp_mod.export_lp(model))
    return {
        "variables": len(model.variables),
        "constraints": len(model.constraints),
        "big_M": model.big_m,
    }


def _cell(value) -> str:
    # repr for floats so CSV and JSON carry identical values
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _table_csv(columns, records: list[dict]) -> str:
    lines = [",".join(columns)]
    for rec in records:
        lines.append(",".join(_cell(rec[c]) for c in columns))
    return "\n".join(lines) + "\n"


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _shares_path(output: str) -> str:
    if output.endswith(".csv"):
        return output[: -len(".csv")] + ".shares.csv"
    return output + ".shares.csv"


def _emit_report(report: Report, fmt: str, output: str | None) -> None:
    rows = [asdict(r) for r in report.rows]
    shares = [asdict(s) for s in report.node_shares]
    if fmt == "json":
        _emit(json.dumps({"rows": rows, "node_shares": shares}, indent=2) + "\n", output)
        return
    rows_csv = _table_csv(REPORT_COLUMNS, rows)
    shares_csv = _table_csv(SHARE_COLUMNS, shares)
    if output is None:
        sys.stdout.write(rows_csv + "\n" + shares_csv)
    else:
        _emit(rows_csv, output)
        _emit(shares_csv, _shares_path(output))


def _emit_records(records: list[dict], columns, fmt: str, output: str | None) -> None:
    if fmt == "json":
        _emit(json.dumps({"rows": records}, indent=2) + "\n", output)
    else:
        _emit(_table_csv(columns, records), output)


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        base = load_config(args.config)
    else:
        base = None

    def pick(flag, cfg_value, default):
        if flag is not None:
            return flag
        if base is not None:
            return cfg_value
        return default

    fleet_file = args.fleet if args.fleet else (base.fleet_file if base else None)
    synthetic = base.synthetic if base and not args.fleet else None
    task_file = args.tasks if args.tasks else (base.task_file if base else None)
    inline = base.tasks_inline if base and not args.tasks else None
    return ExperimentConfig(
        fleet_file=fleet_file,
        synthetic=synthetic,
        task_file=task_file,
        tasks_inline=inline,
        default_p=pick(args.default_p, base.default_p if base else None, 0.9),
        default_alpha=pick(args.default_alpha, base.default_alpha if base else None, 2.0),
        seed=pick(args.seed, base.seed if base else None, 0),
        replications=pick(args.reps, base.replications if base else None, 1000),
        n_extra=pick(args.n_extra, base.n_extra if base else None, 0),
        static_rounding=pick(
            args.static_rounding, base.static_rounding if base else None, "half-up"
        ),
        sort_tasks=(args.sort_tasks or (base.sort_tasks if base else False)),
        workers=pick(args.workers, base.workers if base else None, 1),
        base_dir=base.base_dir if base and not (args.fleet or args.tasks) else ".",
    )


def _pick_task(config: ExperimentConfig, task_id: str | None) -> TaskSpec:
    tasks = config.load_tasks()
    if task_id is None:
        return tasks[0]
    for task in tasks:
        if task.id == task_id:
            return task
    raise ValueError(f"task id {task_id!r} not found")


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="experiment config JSON")
    shared.add_argument("--fleet", help="fleet CSV path")
    shared.add_argument("--tasks", help="task CSV path")
    shared.add_argument("--seed", type=int, default=None, help="master RNG seed")
    shared.add_argument("--reps", type=int, default=None, help="simulation replications")
    shared.add_argument("--format", choices=("csv", "json"), default="csv")
    shared.add_argument(
        "--n-extra", type=int, default=None, help="spare nodes added beyond k"
    )
    shared.add_argument(
        "--sort-tasks", action="store_true", help="sort tasks ascending by size"
    )
    shared.add_argument("--workers", type=int, default=None, help="worker threads")
    shared.add_argument("--default-p", type=float, default=None)
    shared.add_argument("--default-alpha", type=float, default=None)
    shared.add_argument("--static-rounding", choices=STATIC_ROUNDING_MODES, default=None)
    shared.add_argument("-o", "--output", default=None, help="output path (default stdout)")

    parser = argparse.ArgumentParser(
        prog="cdcplan",
        description="Plan and evaluate coded distributed computing over edge fleets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", parents=[shared], help="solve one method per task")
    p_plan.add_argument("--method", choices=METHODS, default="optimal")

    sub.add_parser("sweep", parents=[shared], help="objective for every k").add_argument(
        "--task-id", default=None
    )

    p_sim = sub.add_parser("simulate", parents=[shared], help="simulate planned tasks")
    p_sim.add_argument("--method", choices=METHODS, default="optimal")

    sub.add_parser("compare", parents=[shared], help="all methods, planned + simulated")

    p_exp = sub.add_parser("export-milp", parents=[shared], help="write MPS/LP model")
    p_exp.add_argument("--task-id", default=None)
    p_exp.add_argument("--lp", default=None, help="also write LP format here")

    p_gen = sub.add_parser("gen-fleet", parents=[shared], help="generate synthetic fleet CSV")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--tau-range", type=float, nargs=2, default=(0.05, 5.0))
    p_gen.add_argument("--eta-range", type=float, nargs=2, default=(1.0, 100.0))
    return parser


def _cmd_plan(args) -> None:
    config = _config_from_args(args)
    fleet = config.load_fleet()
    records = []
    for task in config.load_tasks():
        plan = _solve(args.method, fleet, task.size, config)
        plan = inflate_plan(fleet, plan, task.size, config.n_extra)
        records.append(
            {
                "task_id": task.id,
                "D": task.size,
                "method": args.method,
                "k": plan.k,
                "n": plan.n,
                "expected_T": plan.expected_T,
                "selected": ";".join(plan.selected),
                "designated": ";".join(plan.designated),
            }
        )
    columns = ("task_id", "D", "method", "k", "n", "expected_T", "selected", "designated")
    _emit_records(records, columns, args.format, args.output)


def _cmd_sweep(args) -> None:
    config = _config_from_args(args)
    task = _pick_task(config, args.task_id)
    records = run_sweep(config, task)
    _emit_records(records, ("k", "best_T", "selection"), args.format, args.output)


def _cmd_simulate(args) -> None:
    config = _config_from_args(args)
    fleet = config.load_fleet()
    records = []
    for task in config.load_tasks():
        plan = _solve(args.method, fleet, task.size, config)
        plan = inflate_plan(fleet, plan, task.size, config.n_extra)
        stats = run_replications(
            fleet,
            plan,
            task.size,
            reps=config.replications,
            seed=config.seed,
            workers=config.workers,
        )
        records.append(
            {
                "task_id": task.id,
                "D": task.size,
                "method": args.method,
                "k": plan.k,
                "n": plan.n,
                "expected_T": plan.expected_T,
                "count": stats.count,
                "mean": stats.mean,
                "std": stats.std,
                "min": stats.min,
                "max": stats.max,
                "p50": stats.p50,
                "p90": stats.p90,
                "p99": stats.p99,
            }
        )
    columns = (
        "task_id",
        "D",
        "method",
        "k",
        "n",
        "expected_T",
        "count",
        "mean",
        "std",
        "min",
        "max",
        "p50",
        "p90",
        "p99",
    )
    _emit_records(records, columns, args.format, args.output)


def _cmd_compare(args) -> None:
    config = _config_from_args(args)
    report = run_compare(config)
    _emit_report(report, args.format, args.output)


def _cmd_export_milp(args) -> None:
    if args.output is None:
        raise ValueError("export-milp requires -o/--output for the MPS file")
    config = _config_from_args(args)
    task = _pick_task(config, args.task_id)
    info = run_export_milp(config, task, args.output, lp_path=args.lp)
    sys.stdout.write(
        f"wrote {args.output}: {info['variables']} variables, "
        f"{info['constraints']} constraints, big_M={info['big_M']!r}\n"
    )


def _cmd_gen_fleet(args) -> None:
    fleet = gen_synthetic_fleet(
        seed=args.seed if args.seed is not None else 0,
        n=args.n,
        tau_range=tuple(args.tau_range),
        eta_range=tuple(args.eta_range),
        p=args.default_p if args.default_p is not None else 0.9,
        alpha=args.default_alpha if args.default_alpha is not None else 2.0,
    )
    _emit(fleet_to_csv(fleet), args.output)


_COMMANDS = {
    "plan": _cmd_plan,
    "sweep": _cmd_sweep,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
    "export-milp": _cmd_export_milp,
    "gen-fleet": _cmd_gen_fleet,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except (ParseError, FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
