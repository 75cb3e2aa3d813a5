"""
Simulator - Discrete-event execution of a batch on the hybrid platform

The simulator owns time and the true latencies. A driver owns the
decisions:
- GreedyDriver forwards events to the greedy scheduler
- PlanDriver replays a fixed Schedule (exact solutions, baselines)

Per timestamp the loop:
1. Processes all events at that time in (kind, job, stage) order
2. Offers idle replicas to the driver
3. Reports the stage completions of step 1 to the driver
4. Offers idle replicas again

The public side has no queueing: a public stage starts as soon as its
inputs are there.
"""

import heapq
import itertools
import logging
import math
from typing import Dict, List, Optional, Sequence, Set, Tuple

from src.agent.priority import PriorityOrder
from src.agent.scheduler import INITIAL, GreedyScheduler
from src.errors import ConfigurationError, ConsistencyError, DomainError
from src.models.cost import DEFAULT_COST_MODEL, CostModel
from src.models.dag import AppDag
from src.models.job import Job, LatencyTable
from src.models.schedule import PUBLIC, Placement, Schedule, ScheduleEntry
from src.models.transfers import stage_release
from src.sim.events import EventKind, SimEvent
from src.sim.report import SimReport, StageRecord, cost_from_trace

logger = logging.getLogger(__name__)

Key = Tuple[int, int]


class Driver:
    """Decision hooks called by the Simulator. Defaults do nothing."""

    def placement_of(self, job: int, stage: int) -> Optional[Placement]:
        raise NotImplementedError

    def begin(self, sim: "Simulator") -> None:
        pass

    def replica_released(self, sim: "Simulator", stage: int, replica: int) -> None:
        pass

    def stage_completed(self, sim: "Simulator", job: int, stage: int) -> None:
        pass

    def download_completed(self, sim: "Simulator", job: int, stage: int) -> None:
        pass

    def dispatch(self, sim: "Simulator") -> None:
        pass


class Simulator:
    def __init__(
        self,
        dag: AppDag,
        batch: Sequence[Job],
        truth: LatencyTable,
        cost_model: CostModel = DEFAULT_COST_MODEL,
        t0: float = 0.0,
    ):
        if not batch:
            raise DomainError("batch is empty")
        if not truth.covers(batch):
            raise ConfigurationError("truth table does not cover every (job, stage) of the batch")
        problem = truth.validate()
        if problem:
            raise DomainError(problem)

        self.dag = dag
        self.job_ids = sorted(job.id for job in batch)
        self.truth = truth
        self.cost_model = cost_model
        self.t0 = t0
        self.now = t0

        self.trace: List[SimEvent] = []
        self.start: Dict[Key, float] = {}
        self.finish: Dict[Key, float] = {}
        self.placement: Dict[Key, Placement] = {}
        self.downloaded: Set[Key] = set()
        self.result_time: Dict[int, float] = {}
        self._replica_job: Dict[Tuple[int, int], Optional[int]] = {
            (k, i): None for k in range(dag.stage_count) for i in range(dag.replicas[k])
        }
        self._heap: list = []
        self._seq = itertools.count()
        self._driver: Optional[Driver] = None

    # -- queries used by drivers ---------------------------------------------------

    def replica_idle(self, stage: int, replica: int) -> bool:
        return self._replica_job[(stage, replica)] is None

    def started(self, job: int, stage: int) -> bool:
        return (job, stage) in self.start

    def stage_ready(self, job: int, stage: int) -> bool:
        """All predecessors have finished."""
        return all((job, p) in self.finish for p in self.dag.predecessors(stage))

    def private_ready(self, job: int, stage: int) -> bool:
        """Predecessors finished and every public predecessor's output downloaded."""
        for p in self.dag.predecessors(stage):
            if (job, p) not in self.finish:
                return False
            if self.placement[(job, p)].is_public and (job, p) not in self.downloaded:
                return False
        return True

    # -- actions used by drivers ---------------------------------------------------

    def push(self, time_ms: float, kind: EventKind, job: int, stage: int, replica: Optional[int] = None) -> None:
        event = SimEvent(time_ms, kind, job, stage, replica)
        heapq.heappush(self._heap, (event.sort_key(), next(self._seq), event))

    def start_private(self, job: int, stage: int, replica: int) -> None:
        key = (job, stage)
        if key in self.start:
            raise ConsistencyError(f"job {job} stage {stage} started twice")
        if not self.replica_idle(stage, replica):
            raise ConsistencyError(f"replica {replica} of stage {stage} is busy")
        self._replica_job[(stage, replica)] = job
        self.start[key] = self.now
        self.placement[key] = Placement.private(replica)
        self.push(self.now + self.truth.private_ms(job, stage), EventKind.PRIVATE_STAGE_COMPLETE, job, stage, replica)

    def public_release(self, job: int, stage: int, decided_at: float) -> Tuple[float, bool]:
        """
        Earliest public start of a ready stage and whether its input is uploaded.

        Uploads of private-side inputs cannot begin before the offload decision.
        """
        k_count = self.dag.stage_count
        public = [False] * k_count
        finish: List[Optional[float]] = [None] * k_count
        preds = self.dag.predecessors(stage)
        for p in preds:
            public[p] = self.placement[(job, p)].is_public
            finish[p] = self.finish[(job, p)]
        public[stage] = True
        upload = [self.truth.upload_ms(job, k) for k in range(k_count)]
        download = [self.truth.download_ms(job, k) for k in range(k_count)]

        release = stage_release(self.dag, stage, public, finish, upload, download, self.t0)
        needs_upload = not preds or any(not public[p] for p in preds)
        if needs_upload:
            release = max(release, decided_at + upload[stage])
        return release, needs_upload

    def start_public(self, job: int, stage: int, decided_at: float, not_before: Optional[float] = None) -> None:
        key = (job, stage)
        if key in self.start:
            raise ConsistencyError(f"job {job} stage {stage} started twice")
        if not self.stage_ready(job, stage):
            raise ConsistencyError(f"job {job} stage {stage} started before its predecessors finished")
        release, needs_upload = self.public_release(job, stage, decided_at)
        if not_before is not None:
            release = max(release, not_before)
        self.start[key] = release
        self.placement[key] = PUBLIC
        if needs_upload:
            self.push(release, EventKind.PUBLIC_UPLOAD_COMPLETE, job, stage)
        self.push(release + self.truth.public_ms(job, stage), EventKind.PUBLIC_STAGE_COMPLETE, job, stage)

    # -- event loop -------------------------------------------------------------------

    def _store_result(self, job: int, time_ms: float) -> None:
        if time_ms > self.result_time.get(job, -math.inf):
            self.result_time[job] = time_ms

    def _needs_download(self, job: int, stage: int) -> bool:
        succ = self.dag.successors(stage)
        if not succ:
            return True
        for q in succ:
            placement = self._driver.placement_of(job, q)
            if placement is not None and placement.is_private:
                return True
        return False

    def _handle(self, event: SimEvent, completions: List[Key]) -> None:
        key = (event.job, event.stage)
        if event.kind is EventKind.BATCH_ARRIVAL:
            self._driver.begin(self)
        elif event.kind is EventKind.PRIVATE_STAGE_COMPLETE:
            self.finish[key] = event.time_ms
            self._replica_job[(event.stage, event.replica)] = None
            self._driver.replica_released(self, event.stage, event.replica)
            if not self.dag.successors(event.stage):
                self._store_result(event.job, event.time_ms)
            completions.append(key)
        elif event.kind is EventKind.PUBLIC_STAGE_COMPLETE:
            self.finish[key] = event.time_ms
            if self._needs_download(event.job, event.stage):
                self.push(
                    event.time_ms + self.truth.download_ms(event.job, event.stage),
                    EventKind.RESULT_DOWNLOAD_COMPLETE, event.job, event.stage,
                )
            completions.append(key)
        elif event.kind is EventKind.RESULT_DOWNLOAD_COMPLETE:
            self.downloaded.add(key)
            if not self.dag.successors(event.stage):
                self._store_result(event.job, event.time_ms)
            self._driver.download_completed(self, event.job, event.stage)
        # PUBLIC_UPLOAD_COMPLETE only marks the public start in the trace

    def run(self, driver: Driver) -> None:
        if self._driver is not None:
            raise ConsistencyError("a simulator runs only once")
        self._driver = driver
        self.push(self.t0, EventKind.BATCH_ARRIVAL, -1, -1)
        while self._heap:
            self.now = self._heap[0][0][0]
            completions: List[Key] = []
            while self._heap and self._heap[0][0][0] == self.now:
                _, _, event = heapq.heappop(self._heap)
                self.trace.append(event)
                self._handle(event, completions)
            driver.dispatch(self)
            for job, stage in completions:
                driver.stage_completed(self, job, stage)
            driver.dispatch(self)

        expected = len(self.job_ids) * self.dag.stage_count
        if len(self.finish) != expected:
            missing = sorted(
                (j, k) for j in self.job_ids for k in range(self.dag.stage_count) if (j, k) not in self.finish
            )
            raise ConsistencyError(f"simulation stalled with unfinished stages {missing[:5]}")

    def report(self, policy: str, c_max: float, offload_log=(), offloaded_initial: int = 0,
               capacity_warning: bool = False) -> SimReport:
        records = {
            key: StageRecord(self.placement[key], self.start[key], self.finish[key])
            for key in sorted(self.finish)
        }
        makespan = max(self.result_time.values()) - self.t0
        return SimReport(
            policy=policy,
            c_max_ms=c_max,
            makespan_ms=makespan,
            total_cost_usd=cost_from_trace(self.trace, self.dag, self.truth, self.cost_model),
            offloaded_stage_count=sum(1 for r in records.values() if r.placement.is_public),
            offloaded_initial_count=offloaded_initial,
            deadline_missed=makespan > c_max,
            records=records,
            trace=list(self.trace),
            offload_log=list(offload_log),
            capacity_warning=capacity_warning,
        )


class GreedyDriver(Driver):
    def __init__(self, scheduler: GreedyScheduler):
        self.scheduler = scheduler
        self._pending: Dict[Key, float] = {}

    def placement_of(self, job: int, stage: int) -> Optional[Placement]:
        return self.scheduler.job_location[(job, stage)]

    def _flush(self, sim: Simulator) -> None:
        for key in self.scheduler.drain_public():
            self._pending[key] = sim.now
        for job, stage in sorted(self._pending):
            if sim.stage_ready(job, stage):
                decided_at = self._pending.pop((job, stage))
                sim.start_public(job, stage, decided_at)
                self.scheduler.note_public_start(job, stage)

    def begin(self, sim: Simulator) -> None:
        self.scheduler.initial_partition()
        self._flush(sim)

    def replica_released(self, sim: Simulator, stage: int, replica: int) -> None:
        self.scheduler.release_replica(stage, replica, sim.now)

    def stage_completed(self, sim: Simulator, job: int, stage: int) -> None:
        self.scheduler.on_stage_complete(job, stage, sim.now)
        self._flush(sim)

    def dispatch(self, sim: Simulator) -> None:
        dag = sim.dag
        for stage in range(dag.stage_count):
            for replica in range(dag.replicas[stage]):
                if not sim.replica_idle(stage, replica):
                    continue
                job = self.scheduler.on_replica_available(stage, replica, sim.now)
                if job is None:
                    break
                sim.start_private(job, stage, replica)
        self._flush(sim)


class PlanDriver(Driver):
    """
    Executes fixed placements and per-replica orders as early as possible.

    With hold_public_starts the recorded public start times act as release
    times, which reproduces runs whose offload decisions came mid-pipeline.
    """

    def __init__(self, schedule: Schedule, hold_public_starts: bool = False):
        self.schedule = schedule
        self.hold_public_starts = hold_public_starts
        self.lanes = schedule.replica_sequences()
        self._cursor = {lane: 0 for lane in self.lanes}

    def placement_of(self, job: int, stage: int) -> Optional[Placement]:
        return self.schedule.placement(job, stage)

    def _start_public(self, sim: Simulator) -> None:
        for job, stage in self.schedule.public_pairs():
            if sim.started(job, stage) or not sim.stage_ready(job, stage):
                continue
            not_before = self.schedule.start(job, stage) if self.hold_public_starts else None
            sim.start_public(job, stage, sim.t0, not_before)

    def begin(self, sim: Simulator) -> None:
        self._start_public(sim)

    def stage_completed(self, sim: Simulator, job: int, stage: int) -> None:
        self._start_public(sim)

    def dispatch(self, sim: Simulator) -> None:
        for (stage, replica), sequence in self.lanes.items():
            index = self._cursor[(stage, replica)]
            if index >= len(sequence) or not sim.replica_idle(stage, replica):
                continue
            job = sequence[index]
            if sim.private_ready(job, stage):
                sim.start_private(job, stage, replica)
                self._cursor[(stage, replica)] = index + 1


# -- entry points -------------------------------------------------------------------

def run_greedy(
    dag: AppDag,
    batch: Sequence[Job],
    truth: LatencyTable,
    estimates: Optional[LatencyTable] = None,
    order: PriorityOrder = PriorityOrder.SPT,
    c_max: float = math.inf,
    cost_model: CostModel = DEFAULT_COST_MODEL,
    policy: Optional[str] = None,
) -> SimReport:
    """
    Run the greedy scheduler against `truth`.

    The scheduler decides with `estimates` when given, otherwise with the
    latencies carried by the jobs.
    """
    jobs = [job.with_latencies(estimates) for job in batch] if estimates is not None else list(batch)
    scheduler = GreedyScheduler(dag, jobs, c_max, order, cost_model)
    sim = Simulator(dag, jobs, truth, cost_model)
    sim.run(GreedyDriver(scheduler))
    initial = sum(1 for record in scheduler.offload_log if record.reason == INITIAL)
    report = sim.report(
        policy or order.value, c_max, scheduler.offload_log, initial, scheduler.capacity_warning
    )
    logger.info(
        "%s c_max=%s: makespan %.1f ms, cost $%.6f, %d public stages",
        report.policy, c_max, report.makespan_ms, report.total_cost_usd, report.offloaded_stage_count,
    )
    return report


def run_all_private(
    dag: AppDag,
    batch: Sequence[Job],
    truth: LatencyTable,
    order: PriorityOrder = PriorityOrder.SPT,
    cost_model: CostModel = DEFAULT_COST_MODEL,
) -> SimReport:
    return run_greedy(dag, batch, truth, None, order, math.inf, cost_model, policy="all-private")


def execute_fixed(
    dag: AppDag,
    batch: Sequence[Job],
    truth: LatencyTable,
    schedule: Schedule,
    cost_model: CostModel = DEFAULT_COST_MODEL,
    c_max: float = math.inf,
    policy: str = "fixed",
    hold_public_starts: bool = False,
) -> SimReport:
    """Replay `schedule`; start times are recomputed from `truth`."""
    for job in batch:
        for k in range(dag.stage_count):
            if (job.id, k) not in schedule:
                raise ConfigurationError(f"schedule has no entry for job {job.id} stage {k}")
            placement = schedule.placement(job.id, k)
            if placement.is_private and not 0 <= placement.replica < dag.replicas[k]:
                raise ConfigurationError(f"job {job.id} stage {k}: stage has no replica {placement.replica}")
    sim = Simulator(dag, batch, truth, cost_model)
    sim.run(PlanDriver(schedule, hold_public_starts))
    return sim.report(policy, c_max)


def all_public_schedule(dag: AppDag, batch: Sequence[Job]) -> Schedule:
    return Schedule.from_entries(
        ScheduleEntry(job.id, k, PUBLIC, 0.0) for job in batch for k in range(dag.stage_count)
    )


def run_all_public(
    dag: AppDag,
    batch: Sequence[Job],
    truth: LatencyTable,
    cost_model: CostModel = DEFAULT_COST_MODEL,
    c_max: float = math.inf,
) -> SimReport:
    return execute_fixed(dag, batch, truth, all_public_schedule(dag, batch), cost_model, c_max, "all-public")
