"""
Experiment harness - deadline sweeps and comparisons with the exact optimum
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from src.agent.priority import PriorityOrder
from src.errors import ConfigurationError
from src.exact.instance import MilpInstance
from src.exact.knapsack import knapsack_01
from src.exact.search import DEFAULT_NODE_BUDGET, ExactSolution, solve_exact
from src.models.cost import DEFAULT_COST_MODEL, CostModel
from src.models.dag import AppDag
from src.models.job import Job, LatencyTable
from src.sim.report import SimReport
from src.sim.simulator import execute_fixed, run_all_private, run_all_public, run_greedy

logger = logging.getLogger(__name__)

POLICIES = ("spt", "hcf", "all-public", "all-private")

SWEEP_FIELDS = (
    "seed",
    "c_max_ms",
    "policy",
    "repetition",
    "makespan_ms",
    "cost_usd",
    "offloaded_count",
    "offloaded_fraction",
    "deadline_missed",
    "makespan_error_pct",
)


@dataclass(frozen=True)
class SweepSpec:
    c_max_values: Tuple[float, ...]
    policies: Tuple[str, ...] = ("spt", "hcf")
    repetitions: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "c_max_values", tuple(float(c) for c in self.c_max_values))
        object.__setattr__(self, "policies", tuple(p.lower() for p in self.policies))
        if not self.c_max_values:
            raise ConfigurationError("sweep needs at least one c_max value")
        if any(not c > 0 for c in self.c_max_values):
            raise ConfigurationError("every c_max must be positive")
        if not self.policies:
            raise ConfigurationError("sweep needs at least one policy")
        unknown = [p for p in self.policies if p not in POLICIES]
        if unknown:
            raise ConfigurationError(f"unknown policies {unknown} (known: {', '.join(POLICIES)})")
        if self.repetitions < 1:
            raise ConfigurationError("repetitions must be at least 1")


@dataclass(frozen=True)
class SweepRow:
    c_max_ms: float
    policy: str
    repetition: int
    makespan_ms: float
    cost_usd: float
    offloaded_count: int
    offloaded_fraction: float
    deadline_missed: bool
    seed: int = 0

    @property
    def makespan_error_pct(self) -> float:
        """How far the makespan lands from the deadline, in percent of it."""
        return 100.0 * (self.makespan_ms - self.c_max_ms) / self.c_max_ms

    def to_csv_row(self) -> Dict[str, str]:
        return {
            "seed": str(self.seed),
            "c_max_ms": f"{self.c_max_ms:.3f}",
            "policy": self.policy,
            "repetition": str(self.repetition),
            "makespan_ms": f"{self.makespan_ms:.3f}",
            "cost_usd": f"{self.cost_usd:.12f}",
            "offloaded_count": str(self.offloaded_count),
            "offloaded_fraction": f"{self.offloaded_fraction:.6f}",
            "deadline_missed": str(self.deadline_missed).lower(),
            "makespan_error_pct": f"{self.makespan_error_pct:.4f}",
        }


def run_policy(
    dag: AppDag,
    batch: Sequence[Job],
    truth: LatencyTable,
    estimates: Optional[LatencyTable],
    policy: str,
    c_max: float,
    cost_model: CostModel = DEFAULT_COST_MODEL,
) -> SimReport:
    if policy == "all-public":
        return run_all_public(dag, batch, truth, cost_model, c_max)
    if policy == "all-private":
        jobs = [job.with_latencies(estimates) for job in batch] if estimates is not None else batch
        report = run_all_private(dag, jobs, truth, PriorityOrder.SPT, cost_model)
        report.c_max_ms = c_max
        report.deadline_missed = report.makespan_ms > c_max
        return report
    if policy in ("spt", "hcf", "fifo"):
        return run_greedy(dag, batch, truth, estimates, PriorityOrder.parse(policy), c_max, cost_model)
    raise ConfigurationError(f"unknown policy {policy!r}")


def sweep(
    dag: AppDag,
    batch: Sequence[Job],
    truth: LatencyTable,
    estimates: Optional[LatencyTable],
    spec: SweepSpec,
    cost_model: CostModel = DEFAULT_COST_MODEL,
) -> List[SweepRow]:
    """
    One row per (c_max, policy, repetition), c_max ascending, policies in
    the order given.

    Runs do not share state. Repetitions of a run are identical since the
    simulator has no randomness of its own; `spec.seed` only labels the
    rows with the workload they came from.
    """
    rows = []
    for c_max in sorted(spec.c_max_values):
        for policy in spec.policies:
            report = run_policy(dag, batch, truth, estimates, policy, c_max, cost_model)
            for repetition in range(spec.repetitions):
                rows.append(SweepRow(
                    c_max_ms=c_max,
                    policy=policy,
                    repetition=repetition,
                    makespan_ms=report.makespan_ms,
                    cost_usd=report.total_cost_usd,
                    offloaded_count=report.offloaded_stage_count,
                    offloaded_fraction=report.offloaded_fraction,
                    deadline_missed=report.deadline_missed,
                    seed=spec.seed,
                ))
        logger.info("sweep: c_max=%.1f done", c_max)
    return rows


# -- comparison with the optimum ---------------------------------------------------

@dataclass(frozen=True)
class MethodResult:
    method: str
    cost_usd: float
    makespan_ms: float
    deadline_missed: bool


@dataclass
class ComparisonRecord:
    """
    Attributes:
        methods: spt, hcf, all-public, all-private and exact (replayed)
        exact: the solver's own answer
        cost_ratio: greedy cost / exact cost per greedy policy
        speedup: all-private makespan / method makespan
        cost_fraction: method cost / all-public cost
        knapsack_savings: single-stage, single-replica cross-check
    """

    c_max_ms: float
    methods: Dict[str, MethodResult] = field(default_factory=dict)
    exact: ExactSolution = field(default_factory=ExactSolution)
    cost_ratio: Dict[str, float] = field(default_factory=dict)
    speedup: Dict[str, float] = field(default_factory=dict)
    cost_fraction: Dict[str, float] = field(default_factory=dict)
    knapsack_savings: Optional[float] = None

    def summary_lines(self) -> List[str]:
        lines = [f"c_max_ms = {self.c_max_ms:.3f}"]
        for name, result in self.methods.items():
            lines.append(f"{name}.cost_usd = {result.cost_usd:.12f}")
            lines.append(f"{name}.makespan_ms = {result.makespan_ms:.3f}")
            lines.append(f"{name}.deadline_missed = {str(result.deadline_missed).lower()}")
        lines.extend(f"exact.{line}" for line in self.exact.summary_lines())
        for name, value in self.cost_ratio.items():
            lines.append(f"{name}.cost_ratio = {_ratio(value)}")
        for name, value in self.speedup.items():
            lines.append(f"{name}.speedup = {_ratio(value)}")
        for name, value in self.cost_fraction.items():
            lines.append(f"{name}.cost_fraction = {_ratio(value)}")
        if self.knapsack_savings is not None:
            lines.append(f"knapsack.savings_usd = {self.knapsack_savings:.12f}")
        return lines


def _ratio(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.6f}"


def _divide(num: float, den: float) -> float:
    if den == 0:
        return 1.0 if num == 0 else math.inf
    return num / den


def compare_with_optimal(
    dag: AppDag,
    batch: Sequence[Job],
    truth: LatencyTable,
    c_max: float,
    cost_model: CostModel = DEFAULT_COST_MODEL,
    node_budget: int = DEFAULT_NODE_BUDGET,
    free_placement: bool = False,
) -> ComparisonRecord:
    """
    Greedy policies and baselines next to the exact optimum on the same truth.

    The exact solver sees the true latencies; its schedule is replayed
    through the simulator so every method is measured the same way.
    """
    record = ComparisonRecord(c_max_ms=c_max)
    reports: Dict[str, SimReport] = {}
    for policy in ("spt", "hcf"):
        reports[policy] = run_greedy(dag, batch, truth, truth, PriorityOrder.parse(policy), c_max, cost_model)
    reports["all-public"] = run_all_public(dag, batch, truth, cost_model, c_max)
    reports["all-private"] = run_all_private(dag, [job.with_latencies(truth) for job in batch], truth,
                                             PriorityOrder.SPT, cost_model)

    exact_jobs = [job.with_latencies(truth) for job in batch]
    inst = MilpInstance(dag, tuple(exact_jobs), c_max, cost_model, free_placement)
    record.exact = solve_exact(inst, node_budget)
    if record.exact.feasible:
        reports["exact"] = execute_fixed(dag, exact_jobs, truth, record.exact.schedule, cost_model, c_max, "exact")

    for name, report in reports.items():
        missed = report.makespan_ms > c_max
        record.methods[name] = MethodResult(name, report.total_cost_usd, report.makespan_ms, missed)

    baseline = reports["all-private"].makespan_ms
    public_cost = reports["all-public"].total_cost_usd
    for name, report in reports.items():
        record.speedup[name] = _divide(baseline, report.makespan_ms)
        record.cost_fraction[name] = _divide(report.total_cost_usd, public_cost)
    if record.exact.feasible:
        for policy in ("spt", "hcf"):
            record.cost_ratio[policy] = _divide(reports[policy].total_cost_usd, record.exact.public_cost_usd)

    if dag.stage_count == 1 and dag.replicas[0] == 1:
        weights = [job.p_private[0] for job in inst.jobs]
        values = [inst.h[(job.id, 0)] for job in inst.jobs]
        record.knapsack_savings, _ = knapsack_01(weights, values, c_max)
        if record.exact.feasible and record.knapsack_savings != record.exact.savings_usd:
            logger.warning(
                "knapsack savings %.12f differ from the exact search %.12f",
                record.knapsack_savings, record.exact.savings_usd,
            )
    return record
