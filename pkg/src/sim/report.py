"""
Simulation report - What a run cost, how long it took and where everything ran
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from src.agent.scheduler import OffloadRecord
from src.models.cost import DEFAULT_COST_MODEL, CostModel, cost_of_execution
from src.models.dag import AppDag
from src.models.job import LatencyTable
from src.models.schedule import Placement, Schedule, ScheduleEntry
from src.sim.events import EventKind, SimEvent

CSV_FIELDS = (
    "policy",
    "c_max_ms",
    "makespan_ms",
    "cost_usd",
    "offloaded_count",
    "offloaded_fraction",
    "offloaded_initial_count",
    "deadline_missed",
)


@dataclass(frozen=True)
class StageRecord:
    placement: Placement
    start_ms: float
    finish_ms: float


@dataclass
class SimReport:
    """
    Outcome of one simulated batch.

    Attributes:
        makespan_ms: when the last result was stored
        total_cost_usd: public cost from true public latencies
        offloaded_stage_count: stage executions that ran publicly
        offloaded_initial_count: jobs offloaded whole at t0
        records: (job, stage) -> placement, start, finish
        trace: every processed event in processing order
    """

    policy: str
    c_max_ms: float
    makespan_ms: float
    total_cost_usd: float
    offloaded_stage_count: int
    offloaded_initial_count: int
    deadline_missed: bool
    records: Dict[Tuple[int, int], StageRecord] = field(default_factory=dict)
    trace: List[SimEvent] = field(default_factory=list)
    offload_log: List[OffloadRecord] = field(default_factory=list)
    capacity_warning: bool = False

    @property
    def stage_executions(self) -> int:
        return len(self.records)

    @property
    def offloaded_fraction(self) -> float:
        return self.offloaded_stage_count / self.stage_executions if self.records else 0.0

    def trace_lines(self) -> List[str]:
        return [event.trace_line() for event in self.trace]

    def summary_lines(self) -> List[str]:
        """Flat `key = value` block, stable key order."""
        return [
            f"policy = {self.policy}",
            f"c_max_ms = {_fmt(self.c_max_ms)}",
            f"makespan_ms = {_fmt(self.makespan_ms)}",
            f"total_cost_usd = {self.total_cost_usd:.12f}",
            f"stage_executions = {self.stage_executions}",
            f"offloaded_stage_count = {self.offloaded_stage_count}",
            f"offloaded_fraction = {self.offloaded_fraction:.6f}",
            f"offloaded_initial_count = {self.offloaded_initial_count}",
            f"deadline_missed = {str(self.deadline_missed).lower()}",
            f"capacity_warning = {str(self.capacity_warning).lower()}",
        ]

    def to_csv_row(self) -> Dict[str, str]:
        return {
            "policy": self.policy,
            "c_max_ms": _fmt(self.c_max_ms),
            "makespan_ms": _fmt(self.makespan_ms),
            "cost_usd": f"{self.total_cost_usd:.12f}",
            "offloaded_count": str(self.offloaded_stage_count),
            "offloaded_fraction": f"{self.offloaded_fraction:.6f}",
            "offloaded_initial_count": str(self.offloaded_initial_count),
            "deadline_missed": str(self.deadline_missed).lower(),
        }


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return f"{value:.3f}"


def cost_from_trace(
    trace: List[SimEvent], dag: AppDag, truth: LatencyTable, cm: CostModel = DEFAULT_COST_MODEL
) -> float:
    """Public cost recomputed from the PublicStageComplete events alone."""
    pairs = sorted(
        (event.job, event.stage) for event in trace if event.kind is EventKind.PUBLIC_STAGE_COMPLETE
    )
    total = 0.0
    for job, stage in pairs:
        total += cost_of_execution(truth.public_ms(job, stage), dag.memory_mb[stage], cm)
    return total


def schedule_from_report(report: SimReport) -> Schedule:
    return Schedule.from_entries(
        ScheduleEntry(job, stage, record.placement, record.start_ms)
        for (job, stage), record in sorted(report.records.items())
    )
