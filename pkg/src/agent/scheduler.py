"""
Greedy Scheduler - Decides which jobs stay private and which go public

The scheduler:
1. Partitions the batch at t0: the priority-order prefix that fits the
   private capacity stays, the rest is offloaded whole
2. Keeps one priority queue per stage
3. Hands the head of a queue to a replica when one becomes idle
4. Re-checks every queue it touches and offloads jobs whose apparent
   closeness to the deadline (ACD) has gone negative
5. Moves completed jobs on to the next stage(s), or straight to the
   public cloud when the job is already there

It never sees true latencies; every decision uses the estimates carried
by the jobs it was given. The simulator drives it one event at a time.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

from src.agent.priority import PriorityOrder, StageQueue, priority_keys, priority_sequence
from src.errors import ConsistencyError, DomainError
from src.models.cost import DEFAULT_COST_MODEL, CostModel, compute_capacity, critical_path_latency, job_private_runtime
from src.models.dag import AppDag
from src.models.job import Job
from src.models.schedule import PUBLIC, Placement

logger = logging.getLogger(__name__)

INITIAL = "initial"
ACD = "acd"
ENQUEUE = "enqueue"
PUBLIC_TRIGGER = "public"


@dataclass(frozen=True)
class OffloadRecord:
    """One offload decision. `stage` is where the decision was taken."""

    time_ms: float
    job: int
    stage: int
    reason: str


class GreedyScheduler:
    """
    Single-writer scheduler state.

    job_location holds a Placement per (job, stage), or None while the
    stage is still pending.
    """

    def __init__(
        self,
        dag: AppDag,
        batch: Sequence[Job],
        c_max: float,
        order: PriorityOrder = PriorityOrder.SPT,
        cost_model: CostModel = DEFAULT_COST_MODEL,
        t0: float = 0.0,
    ):
        if not batch:
            raise DomainError("batch is empty")
        if not c_max > 0:
            raise DomainError(f"c_max must be positive, got {c_max}")
        for job in batch:
            if not job.fits(dag):
                raise DomainError(f"job {job.id} has {job.stage_count} stages, DAG has {dag.stage_count}")

        self.dag = dag
        self.jobs: Dict[int, Job] = {job.id: job for job in batch}
        if len(self.jobs) != len(batch):
            raise DomainError("batch contains duplicate job ids")
        self.c_max = c_max
        self.t0 = t0
        self.deadline = t0 + c_max
        self.order = order
        self.keys = priority_keys(batch, dag, order, cost_model)

        self.queues = [StageQueue(k, order, self.keys) for k in range(dag.stage_count)]
        self.replica_busy: Dict[Tuple[int, int], Optional[int]] = {
            (k, i): None for k in range(dag.stage_count) for i in range(dag.replicas[k])
        }
        self.replica_busy_until: Dict[Tuple[int, int], float] = {lane: t0 for lane in self.replica_busy}
        self.job_location: Dict[Tuple[int, int], Optional[Placement]] = {
            (j, k): None for j in self.jobs for k in range(dag.stage_count)
        }
        self.dispatched: Set[Tuple[int, int]] = set()
        self.completed: Set[Tuple[int, int]] = set()
        self.public_jobs: Set[int] = set()
        self.offload_log: List[OffloadRecord] = []
        self.capacity_warning = False
        self._initialized = False
        self._newly_public: List[Tuple[int, int]] = []

    # -- helpers --------------------------------------------------------------

    def must_private(self, job: int) -> frozenset:
        return self.jobs[job].must_private | self.dag.default_must_private

    def is_pinned(self, job: int) -> bool:
        return bool(self.must_private(job))

    def drain_public(self) -> List[Tuple[int, int]]:
        """(job, stage) pairs marked public since the last call."""
        pending, self._newly_public = self._newly_public, []
        return pending

    def note_public_start(self, job: int, stage: int) -> None:
        if self.job_location[(job, stage)] != PUBLIC:
            raise ConsistencyError(f"job {job} stage {stage} started publicly but is not marked public")
        self.dispatched.add((job, stage))

    def _offload_job(self, job: int, now: float, stage: int, reason: str) -> None:
        for k in range(self.dag.stage_count):
            key = (job, k)
            if key not in self.dispatched and self.job_location[key] is None:
                self.job_location[key] = PUBLIC
                self._newly_public.append(key)
        for queue in self.queues:
            queue.discard(job)
        self.public_jobs.add(job)
        self.offload_log.append(OffloadRecord(now, job, stage, reason))
        logger.debug("t=%.3f offload job %d at stage %d (%s)", now, job, stage, reason)

    # -- operations -----------------------------------------------------------

    def initial_partition(self) -> Tuple[List[int], List[int]]:
        """
        Split the batch at t0.

        Jobs with a non-empty must-private set are always retained and
        counted first.

        Returns:
            (retained, offloaded), both in priority order
        """
        if self._initialized:
            raise ConsistencyError("initial_partition already ran")
        self._initialized = True

        capacity = compute_capacity(self.dag, self.c_max)
        ordered = priority_sequence(self.keys, self.order)
        forced = [j for j in ordered if self.is_pinned(j)]
        used = sum(job_private_runtime(self.jobs[j]) for j in forced)
        if used > capacity:
            self.capacity_warning = True
            logger.warning(
                "must-private jobs need %.1f ms of private time, capacity is %.1f ms", used, capacity
            )

        retained_set = set(forced)
        offloaded: List[int] = []
        full = False
        for j in ordered:
            if j in retained_set:
                continue
            runtime = job_private_runtime(self.jobs[j])
            if not full and used + runtime <= capacity:
                retained_set.add(j)
                used += runtime
            else:
                full = True
                offloaded.append(j)
        retained = [j for j in ordered if j in retained_set]

        source = self.dag.sources[0]
        for j in offloaded:
            self._offload_job(j, self.t0, source, INITIAL)
        for j in retained:
            for k in self.dag.sources:
                self.queues[k].insert(j)

        logger.info(
            "initial partition: %d retained, %d offloaded (capacity %.1f ms)",
            len(retained), len(offloaded), capacity,
        )
        return retained, offloaded

    def acd(self, stage: int, job: int, now: float) -> float:
        """Apparent closeness to deadline of `job` waiting in the queue of `stage`."""
        queue = self.queues[stage]
        if job not in queue:
            raise ConsistencyError(f"job {job} is not queued at stage {stage}")
        ahead = 0.0
        for other in queue.jobs():
            if other == job:
                break
            ahead += self.jobs[other].p_private[stage]
        delay = ahead / self.dag.replicas[stage]
        return self.deadline - (now + delay + critical_path_latency(self.dag, self.jobs[job], stage))

    def on_queue_change(self, stage: int, now: float) -> List[int]:
        """
        Offload every queued job whose ACD is negative.

        Jobs are checked head to tail; a job that leaves no longer counts
        towards the queue delay of the jobs behind it.
        """
        replicas = self.dag.replicas[stage]
        ahead = 0.0
        offloaded = []
        for job in self.queues[stage].jobs():
            critical = critical_path_latency(self.dag, self.jobs[job], stage)
            slack = self.deadline - (now + ahead / replicas + critical)
            if slack < 0 and not self.is_pinned(job):
                offloaded.append(job)
                continue
            ahead += self.jobs[job].p_private[stage]
        for job in offloaded:
            self._offload_job(job, now, stage, ACD)
        return offloaded

    def release_replica(self, stage: int, replica: int, now: float) -> None:
        lane = (stage, replica)
        if self.replica_busy.get(lane) is None:
            raise ConsistencyError(f"replica {replica} of stage {stage} is not busy")
        self.replica_busy[lane] = None
        self.replica_busy_until[lane] = now

    def on_replica_available(self, stage: int, replica: int, now: float) -> Optional[int]:
        """Dispatch the head of the stage queue to `replica`."""
        lane = (stage, replica)
        if lane not in self.replica_busy:
            raise ConsistencyError(f"stage {stage} has no replica {replica}")
        if self.replica_busy[lane] is not None:
            raise ConsistencyError(f"replica {replica} of stage {stage} is busy with job {self.replica_busy[lane]}")
        job = self.queues[stage].pop_head()
        if job is None:
            return None
        self.job_location[(job, stage)] = Placement.private(replica)
        self.dispatched.add((job, stage))
        self.replica_busy[lane] = job
        self.replica_busy_until[lane] = now + self.jobs[job].p_private[stage]
        self.on_queue_change(stage, now)
        return job

    def on_stage_complete(self, job: int, stage: int, now: float) -> List[Tuple[int, str]]:
        """
        Move `job` past `stage`.

        Returns:
            (successor, "enqueue" | "public") for every successor that became ready
        """
        key = (job, stage)
        if key not in self.dispatched:
            raise ConsistencyError(f"job {job} stage {stage} completed but was never dispatched")
        if key in self.completed:
            raise ConsistencyError(f"job {job} stage {stage} completed twice")
        self.completed.add(key)
        placement = self.job_location[key]
        if placement is not None and placement.is_private:
            lane = (stage, placement.replica)
            if self.replica_busy.get(lane) == job:
                self.release_replica(stage, placement.replica, now)

        actions: List[Tuple[int, str]] = []
        for succ in self.dag.successors(stage):
            if any((job, p) not in self.completed for p in self.dag.predecessors(succ)):
                continue
            if self.job_location[(job, succ)] == PUBLIC:
                actions.append((succ, PUBLIC_TRIGGER))
            else:
                self.queues[succ].insert(job)
                actions.append((succ, ENQUEUE))
                self.on_queue_change(succ, now)
        return actions
