"""
Timing - start times for fixed placements

list_schedule computes earliest starts when placements and per-replica
orders are given. find_timing searches for per-replica orders that meet
the deadline when only placements are given.

Replicas of a stage are identical, so find_timing only considers dispatch
orders where each job goes to the replica that frees up first (lowest
index on ties). Every schedule can be turned into one of those without
delaying any job.
"""

from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from src.exact.instance import Key, MilpInstance
from src.models.schedule import PUBLIC, Placement, Schedule, ScheduleEntry
from src.models.transfers import result_time, stage_release, tail_after

TOLERANCE = 1e-9


@dataclass(frozen=True)
class Timing:
    placements: Dict[Key, Placement]
    starts: Dict[Key, float]

    def to_schedule(self) -> Schedule:
        return Schedule.from_entries(
            ScheduleEntry(job, stage, self.placements[(job, stage)], self.starts[(job, stage)])
            for job, stage in sorted(self.starts)
        )


def _vectors(inst: MilpInstance, job: int, public: Sequence[bool]):
    j = inst.job(job)
    durations = [j.p_public[k] if public[k] else j.p_private[k] for k in range(inst.dag.stage_count)]
    return durations, list(j.upload_ms), list(j.download_ms)


def list_schedule(
    inst: MilpInstance,
    placements: Mapping[Key, Placement],
    sequences: Mapping[Tuple[int, int], Sequence[int]],
) -> Optional[Dict[Key, float]]:
    """
    Earliest start of every (job, stage) given placements and replica orders.

    Returns:
        start times, or None when the replica orders contradict precedence
    """
    dag = inst.dag
    public = {job: [placements[(job, k)].is_public for k in range(dag.stage_count)] for job in inst.job_ids}
    lane_of: Dict[Key, Tuple[Tuple[int, int], int]] = {}
    for lane, jobs in sequences.items():
        for position, job in enumerate(jobs):
            lane_of[(job, lane[0])] = (lane, position)

    starts: Dict[Key, float] = {}
    finish: Dict[Key, float] = {}
    pending = list(inst.keys)
    while pending:
        progress = False
        waiting = []
        for job, stage in pending:
            key = (job, stage)
            if any((job, p) not in finish for p in dag.predecessors(stage)):
                waiting.append(key)
                continue
            lane_wait = 0.0
            if placements[key].is_private:
                lane, position = lane_of[key]
                if position > 0:
                    prev = (sequences[lane][position - 1], stage)
                    if prev not in finish:
                        waiting.append(key)
                        continue
                    lane_wait = finish[prev]
            durations, upload, download = _vectors(inst, job, public[job])
            job_finish = [finish.get((job, k)) for k in range(dag.stage_count)]
            start = max(stage_release(dag, stage, public[job], job_finish, upload, download), lane_wait)
            starts[key] = start
            finish[key] = start + durations[stage]
            progress = True
        if not progress:
            return None
        pending = waiting
    return starts


class _TimingSearch:
    """Depth-first search over stages in topological order."""

    def __init__(self, inst: MilpInstance, public: Mapping[Key, bool]):
        self.inst = inst
        self.dag = inst.dag
        self.order = list(inst.dag.topological_order)
        self.public = {job: [bool(public[(job, k)]) for k in range(self.dag.stage_count)] for job in inst.job_ids}
        self.vectors = {job: _vectors(inst, job, self.public[job]) for job in inst.job_ids}
        self.tail = {
            job: tail_after(self.dag, self.public[job], *self.vectors[job]) for job in inst.job_ids
        }
        self._failed = set()

    def _late(self, job: int, stage: int, finish: float) -> bool:
        return finish + self.tail[job][stage] > self.inst.c_max + TOLERANCE

    def _stage_options(
        self, stage: int, finish: Dict[Key, float]
    ) -> Iterator[Tuple[Dict[Key, float], Dict[Key, float], Dict[Key, int]]]:
        """Feasible (starts, finishes, replica) choices for one stage."""
        release: Dict[int, float] = {}
        starts: Dict[Key, float] = {}
        ends: Dict[Key, float] = {}
        private_jobs: List[int] = []
        for job in self.inst.job_ids:
            durations, upload, download = self.vectors[job]
            job_finish = [finish.get((job, k)) for k in range(self.dag.stage_count)]
            release[job] = stage_release(self.dag, stage, self.public[job], job_finish, upload, download)
            if self.public[job][stage]:
                start = release[job]
                end = start + durations[stage]
                if self._late(job, stage, end):
                    return
                starts[(job, stage)] = start
                ends[(job, stage)] = end
            else:
                private_jobs.append(job)

        replicas = self.dag.replicas[stage]
        placed: List[Tuple[int, float, float, int]] = []

        def extend(remaining: List[int], free: List[float]):
            if not remaining:
                yield list(placed)
                return
            lane = min(range(replicas), key=lambda i: (free[i], i))
            for index, job in enumerate(remaining):
                start = max(release[job], free[lane])
                end = start + self.vectors[job][0][stage]
                if self._late(job, stage, end):
                    continue
                saved = free[lane]
                free[lane] = end
                placed.append((job, start, end, lane))
                yield from extend(remaining[:index] + remaining[index + 1:], free)
                placed.pop()
                free[lane] = saved

        frontier: List[Tuple[Tuple[float, ...], list]] = []
        for choice in extend(private_jobs, [0.0] * replicas):
            vector = tuple(end for _, _, end, _ in sorted(choice))
            if not self.dag.successors(stage):
                frontier = [(vector, choice)]
                break
            if any(all(a <= b for a, b in zip(other, vector)) for other, _ in frontier):
                continue
            frontier = [(o, c) for o, c in frontier if not all(a <= b for a, b in zip(vector, o))]
            frontier.append((vector, choice))

        for _, choice in frontier:
            option_starts = dict(starts)
            option_ends = dict(ends)
            lanes: Dict[Key, int] = {}
            for job, start, end, lane in choice:
                option_starts[(job, stage)] = start
                option_ends[(job, stage)] = end
                lanes[(job, stage)] = lane
            yield option_starts, option_ends, lanes

    def search(self) -> Optional[Timing]:
        found = self._descend(0, {}, {}, {})
        if found is None:
            return None
        starts, lanes = found
        placements = {
            key: PUBLIC if self.public[key[0]][key[1]] else Placement.private(lanes[key])
            for key in self.inst.keys
        }
        return Timing(placements, starts)

    def _descend(self, position, finish, starts, lanes):
        if position == len(self.order):
            return dict(starts), dict(lanes)
        memo = (position, tuple(sorted(finish.items())))
        if memo in self._failed:
            return None
        stage = self.order[position]
        for option_starts, option_ends, option_lanes in self._stage_options(stage, finish):
            found = self._descend(
                position + 1,
                {**finish, **option_ends},
                {**starts, **option_starts},
                {**lanes, **option_lanes},
            )
            if found is not None:
                return found
        self._failed.add(memo)
        return None


def find_timing(inst: MilpInstance, public: Mapping[Key, bool]) -> Optional[Timing]:
    """
    Replica orders and start times meeting the deadline for fixed placements.

    Returns:
        a Timing, or None when no order meets c_max
    """
    return _TimingSearch(inst, public).search()


def schedule_makespan(inst: MilpInstance, sched: Schedule) -> float:
    """Latest stored result, computed from the schedule's start times."""
    latest = 0.0
    for job in inst.job_ids:
        j = inst.job(job)
        flags = [sched.placement(job, k).is_public for k in range(inst.dag.stage_count)]
        for k in inst.dag.sinks:
            duration = j.p_public[k] if flags[k] else j.p_private[k]
            latest = max(latest, result_time(inst.dag, k, flags, sched.start(job, k) + duration, j.download_ms))
    return latest
