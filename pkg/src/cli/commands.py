"""
Command line - generate, train, simulate, solve, verify, sweep, compare

Every subcommand reads its inputs, writes its results into the output
directory and records the run in runs.json there. Exit codes:
    0  success
    1  usage error
    2  input validation error
    3  schedule violations found
    4  no feasible schedule
"""

import argparse
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from src.bench.sweep import POLICIES, SWEEP_FIELDS, SweepSpec, compare_with_optimal, run_policy, sweep
from src.bench.workload import generate_training_trace, generate_workload
from src.errors import (
    ConfigurationError,
    DagValidationError,
    DomainError,
    InputFormatError,
    OrchestratorError,
    RankDeficiencyError,
    SizeGuardError,
)
from src.exact.instance import MilpInstance
from src.exact.search import DEFAULT_NODE_BUDGET, solve_exact
from src.exact.timing import schedule_makespan
from src.exact.verify import verify_schedule
from src.integrations.csv_files import (
    read_latency_csv,
    read_schedule_csv,
    read_trace_csv,
    read_workload_csv,
    write_latency_csv,
    write_lines,
    write_offload_csv,
    write_rows_csv,
    write_schedule_csv,
    write_trace_csv,
    write_workload_csv,
)
from src.integrations.dag_file import load_dag, save_dag
from src.integrations.repository import RunRecord, RunRepository, run_id
from src.knowledge.app_templates import CALIBRATED_ERROR_SIGMA, TEMPLATES, custom_template, get_template
from src.models.dag import AppDag
from src.models.job import Job, LatencyTable
from src.predict.selection import DEFAULT_LAMBDA_GRID
from src.predict.stage_models import estimate_batch, fit_stage_models, format_model_file, mape_report, parse_model_file
from src.settings import LOG_FORMAT, load_settings
from src.sim.report import schedule_from_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_VIOLATIONS = 3
EXIT_INFEASIBLE = 4

BANNER = "=" * 60


@dataclass
class RunConfig:
    """Everything a subcommand needs, built once from the parsed flags."""

    command: str
    out_dir: str
    seed: int = 0
    dag_path: Optional[str] = None
    workload_path: Optional[str] = None
    truth_path: Optional[str] = None
    models_path: Optional[str] = None
    trace_path: Optional[str] = None
    schedule_path: Optional[str] = None
    template: str = "matrix"
    jobs: int = 20
    trace_jobs: int = 0
    error_factor: float = 1.0
    error_sigma: float = 0.0
    policy: str = "spt"
    policies: Tuple[str, ...] = ("spt", "hcf")
    c_max_ms: Optional[float] = None
    c_max_values: Tuple[float, ...] = ()
    repetitions: int = 1
    lam: float = 1.0
    lambda_search: bool = False
    folds: int = 5
    node_budget: int = DEFAULT_NODE_BUDGET
    free_placement: bool = False
    outputs: List[str] = field(default_factory=list)

    def arguments(self) -> Dict[str, str]:
        data = asdict(self)
        data.pop("outputs")
        data.pop("out_dir")
        return {key: str(value) for key, value in sorted(data.items())}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be positive")
    return value


def _float_list(text: str) -> Tuple[float, ...]:
    return tuple(_positive_float(part) for part in text.split(",") if part.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hybrid-orchestrator", description="Hybrid-cloud batch scheduling toolkit")
    parser.add_argument("--seed", type=int, default=0, help="seed for every random draw (default 0)")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--out", default=None, help="output directory (default from HYBRID_ORCH_DATA_DIR or 'data')")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("generate", help="sample a workload from a template")
    p.add_argument("--template", default="matrix", choices=sorted(TEMPLATES), help="built-in application")
    p.add_argument("--dag", help="use this DAG file with generic latencies instead of a template")
    p.add_argument("--jobs", type=int, default=20, help="jobs in the batch")
    p.add_argument("--error-factor", type=_positive_float, default=1.0, help="multiplier on estimates")
    p.add_argument("--error-sigma", type=float, default=0.0,
                   help=f"log-normal estimate error (calibrated value {CALIBRATED_ERROR_SIGMA})")
    p.add_argument("--trace-jobs", type=int, default=0, help="also write a training trace of this many jobs")

    p = sub.add_parser("train", help="fit per-stage latency models from a training trace")
    p.add_argument("--dag", required=True, help="DAG file")
    p.add_argument("--trace", required=True, help="training trace CSV")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="ridge penalty")
    p.add_argument("--lambda-search", action="store_true", help="pick the penalty by k-fold cross validation")
    p.add_argument("--folds", type=int, default=5, help="folds for --lambda-search")

    p = sub.add_parser("simulate", help="run a policy on a workload")
    p.add_argument("--dag", required=True, help="DAG file")
    p.add_argument("--workload", required=True, help="workload CSV (scheduler estimates)")
    p.add_argument("--truth", help="true latencies CSV (default: the workload itself)")
    p.add_argument("--models", help="re-estimate latencies with this model file")
    p.add_argument("--policy", default="spt", choices=list(POLICIES) + ["fifo"], help="scheduling policy")
    p.add_argument("--cmax", type=_positive_float, required=True, help="deadline in ms")

    p = sub.add_parser("solve", help="exact cheapest schedule meeting the deadline")
    p.add_argument("--dag", required=True, help="DAG file")
    p.add_argument("--workload", required=True, help="workload CSV")
    p.add_argument("--cmax", type=_positive_float, required=True, help="deadline in ms")
    p.add_argument("--node-budget", type=int, default=DEFAULT_NODE_BUDGET, help="branch-and-bound node limit")
    p.add_argument("--free-placement", action="store_true", help="allow private stages after public ones")

    p = sub.add_parser("verify", help="check a schedule against a workload and deadline")
    p.add_argument("--dag", required=True, help="DAG file")
    p.add_argument("--workload", required=True, help="workload CSV")
    p.add_argument("--schedule", required=True, help="schedule CSV")
    p.add_argument("--cmax", type=_positive_float, required=True, help="deadline in ms")
    p.add_argument("--free-placement", action="store_true", help="allow private stages after public ones")

    p = sub.add_parser("sweep", help="run policies over a list of deadlines")
    p.add_argument("--dag", required=True, help="DAG file")
    p.add_argument("--workload", required=True, help="workload CSV (scheduler estimates)")
    p.add_argument("--truth", help="true latencies CSV (default: the workload itself)")
    p.add_argument("--cmax", type=_float_list, required=True, help="comma-separated deadlines in ms")
    p.add_argument("--policies", default="spt,hcf", help=f"comma-separated subset of {', '.join(POLICIES)}")
    p.add_argument("--repetitions", type=int, default=1, help="rows per (deadline, policy)")

    p = sub.add_parser("compare", help="greedy policies and baselines against the exact optimum")
    p.add_argument("--dag", required=True, help="DAG file")
    p.add_argument("--workload", required=True, help="workload CSV (taken as the truth)")
    p.add_argument("--cmax", type=_positive_float, required=True, help="deadline in ms")
    p.add_argument("--node-budget", type=int, default=DEFAULT_NODE_BUDGET, help="branch-and-bound node limit")
    p.add_argument("--free-placement", action="store_true", help="allow private stages after public ones")
    return parser


def build_config(args: argparse.Namespace, out_dir: str) -> RunConfig:
    cfg = RunConfig(command=args.command, out_dir=out_dir, seed=args.seed)
    mapping = {
        "dag": "dag_path", "workload": "workload_path", "truth": "truth_path", "models": "models_path",
        "trace": "trace_path", "schedule": "schedule_path", "template": "template", "jobs": "jobs",
        "trace_jobs": "trace_jobs", "error_factor": "error_factor", "error_sigma": "error_sigma",
        "policy": "policy", "repetitions": "repetitions", "lam": "lam", "lambda_search": "lambda_search",
        "folds": "folds", "node_budget": "node_budget", "free_placement": "free_placement",
    }
    for flag, attr in mapping.items():
        if getattr(args, flag, None) is not None:
            setattr(cfg, attr, getattr(args, flag))
    cmax = getattr(args, "cmax", None)
    if isinstance(cmax, tuple):
        cfg.c_max_values = cmax
    elif cmax is not None:
        cfg.c_max_ms = cmax
    if getattr(args, "policies", None):
        cfg.policies = tuple(p.strip().lower() for p in args.policies.split(",") if p.strip())

    for attr in ("dag_path", "workload_path", "truth_path", "models_path", "trace_path", "schedule_path"):
        path = getattr(cfg, attr)
        if path is not None and not os.path.exists(path):
            raise InputFormatError("file not found", path)
    if cfg.jobs < 1 or cfg.trace_jobs < 0 or cfg.repetitions < 1 or cfg.folds < 2:
        raise ConfigurationError("--jobs and --repetitions must be at least 1, --folds at least 2")
    return cfg


# -- shared loading -----------------------------------------------------------------

def _load_inputs(cfg: RunConfig) -> Tuple[AppDag, List[Job]]:
    dag = load_dag(cfg.dag_path)
    batch = read_workload_csv(cfg.workload_path)
    for job in batch:
        if not job.fits(dag):
            raise InputFormatError(f"job {job.id} has {job.stage_count} stages, DAG has {dag.stage_count}",
                                   cfg.workload_path)
    return dag, batch


def _truth(cfg: RunConfig, batch: Sequence[Job]) -> LatencyTable:
    if cfg.truth_path is None:
        return LatencyTable.from_jobs(batch)
    truth = read_latency_csv(cfg.truth_path)
    if not truth.covers(batch):
        raise InputFormatError("truth does not cover every (job, stage) of the workload", cfg.truth_path)
    return truth


def _output(cfg: RunConfig, name: str) -> str:
    cfg.outputs.append(name)
    return os.path.join(cfg.out_dir, name)


def _print_block(title: str, lines: Sequence[str]) -> None:
    print("\n" + BANNER)
    print(title)
    print(BANNER)
    for line in lines:
        print(line)
    print(BANNER)


# -- subcommands --------------------------------------------------------------------

def cmd_generate(cfg: RunConfig) -> int:
    template = custom_template(load_dag(cfg.dag_path)) if cfg.dag_path else get_template(cfg.template)
    dag, batch, truth, _ = generate_workload(template, cfg.jobs, cfg.seed, cfg.error_factor, cfg.error_sigma)
    save_dag(dag, _output(cfg, "dag.txt"))
    write_workload_csv(batch, _output(cfg, "workload.csv"))
    write_latency_csv(truth, _output(cfg, "truth.csv"))
    if cfg.trace_jobs:
        rows = generate_training_trace(template, cfg.trace_jobs, cfg.seed)
        write_trace_csv(rows, _output(cfg, "trace.csv"))
    _print_block("WORKLOAD GENERATED", [
        f"✓ {template.name}: {len(batch)} jobs, {dag.stage_count} stages",
        f"  Files: {', '.join(cfg.outputs)}",
    ])
    return EXIT_OK


def cmd_train(cfg: RunConfig) -> int:
    dag = load_dag(cfg.dag_path)
    rows = read_trace_csv(cfg.trace_path)
    grid = DEFAULT_LAMBDA_GRID if cfg.lambda_search else None
    models = fit_stage_models(dag, rows, cfg.lam, grid, cfg.folds, cfg.seed)
    write_lines(format_model_file(models).splitlines(), _output(cfg, "models.txt"))
    report = mape_report(dag, models, rows)
    write_rows_csv(
        ["stage", "quantity", "mape_pct"],
        ({"stage": s, "quantity": q, "mape_pct": f"{m:.4f}"} for s, q, m in report),
        _output(cfg, "mape.csv"),
    )
    _print_block("MODELS TRAINED", [f"  {s:<20} {q:<10} MAPE {m:6.2f}%" for s, q, m in report])
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    dag, batch = _load_inputs(cfg)
    truth = _truth(cfg, batch)
    if cfg.models_path:
        with open(cfg.models_path, "r") as f:
            models = parse_model_file(f.read(), cfg.models_path)
        batch = estimate_batch(dag, models, batch)
    report = run_policy(dag, batch, truth, None, cfg.policy, cfg.c_max_ms)
    prefix = f"simulate_{cfg.policy}"
    write_lines(report.summary_lines(), _output(cfg, f"{prefix}_report.txt"))
    write_lines(report.trace_lines(), _output(cfg, f"{prefix}_trace.txt"))
    write_schedule_csv(schedule_from_report(report), _output(cfg, f"{prefix}_schedule.csv"))
    write_offload_csv(report.offload_log, _output(cfg, f"{prefix}_offloads.csv"))
    marker = "✗ deadline missed" if report.deadline_missed else "✓ deadline met"
    _print_block(f"SIMULATION ({cfg.policy})", report.summary_lines() + [marker])
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    dag, batch = _load_inputs(cfg)
    inst = MilpInstance(dag, tuple(batch), cfg.c_max_ms, free_placement=cfg.free_placement)
    solution = solve_exact(inst, cfg.node_budget)
    write_lines(solution.summary_lines(), _output(cfg, "solution.txt"))
    write_schedule_csv(solution.schedule, _output(cfg, "schedule.csv"))
    if not solution.feasible:
        _print_block("NO FEASIBLE SCHEDULE", solution.summary_lines())
        return EXIT_INFEASIBLE
    _print_block("EXACT SOLUTION", solution.summary_lines())
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    dag, batch = _load_inputs(cfg)
    schedule = read_schedule_csv(cfg.schedule_path)
    inst = MilpInstance(dag, tuple(batch), cfg.c_max_ms, free_placement=cfg.free_placement)
    violations = verify_schedule(inst, schedule)
    lines = [str(v) for v in violations]
    write_lines(lines, _output(cfg, "violations.txt"))
    if violations:
        _print_block(f"✗ {len(violations)} VIOLATION(S)", lines)
        return EXIT_VIOLATIONS
    _print_block("✓ SCHEDULE IS FEASIBLE", [
        f"  {len(schedule)} entries checked",
        f"  makespan {schedule_makespan(inst, schedule):.3f} ms of {cfg.c_max_ms:.3f} ms",
    ])
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    dag, batch = _load_inputs(cfg)
    truth = _truth(cfg, batch)
    spec = SweepSpec(cfg.c_max_values, cfg.policies, cfg.repetitions, cfg.seed)
    rows = sweep(dag, batch, truth, None, spec)
    write_rows_csv(SWEEP_FIELDS, (row.to_csv_row() for row in rows), _output(cfg, "sweep.csv"))
    _print_block("SWEEP", [
        f"  {r.policy:<12} c_max {r.c_max_ms:>12.1f}  cost ${r.cost_usd:.6f}  offloaded {r.offloaded_count}"
        for r in rows if r.repetition == 0
    ])
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    dag, batch = _load_inputs(cfg)
    truth = LatencyTable.from_jobs(batch)
    record = compare_with_optimal(dag, batch, truth, cfg.c_max_ms, node_budget=cfg.node_budget,
                                  free_placement=cfg.free_placement)
    lines = record.summary_lines()
    write_lines(lines, _output(cfg, "compare.txt"))
    _print_block("COMPARISON WITH THE OPTIMUM", lines)
    return EXIT_OK if record.exact.feasible else EXIT_INFEASIBLE


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "simulate": cmd_simulate,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
}


def _configure_logging(level: Optional[str], default: str) -> None:
    name = (level or default).upper()
    numeric = getattr(logging, name, None)
    if not isinstance(numeric, int):
        raise UsageError(f"unknown log level {name!r}")
    logging.basicConfig(level=numeric, format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger("src").setLevel(numeric)


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = load_settings()
    parser = build_parser()
    try:
        args = parser.parse_args(list(sys.argv[1:] if argv is None else argv))
        if args.command is None:
            raise UsageError(parser.format_usage() + "error: a subcommand is required")
        _configure_logging(args.log_level, settings.log_level)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return int(e.code or 0)

    out_dir = args.out or settings.data_dir
    try:
        cfg = build_config(args, out_dir)
        if cfg.command in ("simulate", "solve", "verify", "compare") and not (cfg.c_max_ms and math.isfinite(cfg.c_max_ms)):
            raise ConfigurationError("--cmax must be a positive, finite number of milliseconds")
        repo = RunRepository(out_dir)
        code = COMMANDS[cfg.command](cfg)
        repo.save(RunRecord(
            id=run_id(cfg.command, cfg.arguments()),
            command=cfg.command,
            arguments=cfg.arguments(),
            outputs=list(cfg.outputs),
            summary={"exit_code": str(code)},
        ))
        return code
    except (InputFormatError, DagValidationError, ConfigurationError, DomainError,
            RankDeficiencyError, SizeGuardError, OSError) as e:
        print(f"\n✗ Error: {e}\n", file=sys.stderr)
        return EXIT_INPUT
    except OrchestratorError as e:
        logger.error("internal error: %s", e)
        raise
