"""
Schedule verification - every way a schedule can break the model

Violations are returned as data. A schedule is feasible when the list is
empty. Slack is the signed amount by which the constraint is missed
(negative means violated).
"""

from dataclasses import dataclass
from typing import Dict, List

from src.exact.instance import MilpInstance
from src.models.schedule import Schedule
from src.models.transfers import edge_delay, result_time

TOLERANCE = 1e-9

FAMILIES = (
    "completeness",
    "assignment",
    "privacy",
    "public_chain",
    "start",
    "upload",
    "precedence",
    "sequencing",
    "makespan",
)


@dataclass(frozen=True)
class Violation:
    family: str
    job: int
    stage: int
    slack: float
    detail: str = ""

    def __str__(self) -> str:
        text = f"{self.family}: job {self.job} stage {self.stage} slack {self.slack:.6f}"
        return f"{text} ({self.detail})" if self.detail else text


def _duration(inst: MilpInstance, job: int, stage: int, public: bool) -> float:
    j = inst.job(job)
    return j.p_public[stage] if public else j.p_private[stage]


def verify_schedule(inst: MilpInstance, sched: Schedule, tolerance: float = TOLERANCE) -> List[Violation]:
    """
    Check `sched` against the instance.

    Durations come from the instance jobs. Start times are relative to t0 = 0.
    """
    dag = inst.dag
    violations: List[Violation] = []
    expected = set(inst.keys)

    for job, stage in sorted(expected - set(sched.entries)):
        violations.append(Violation("completeness", job, stage, -1.0, "not scheduled"))
    for job, stage in sorted(set(sched.entries) - expected):
        violations.append(Violation("completeness", job, stage, -1.0, "not part of the instance"))
    if any(v.family == "completeness" for v in violations):
        return violations

    public: Dict[tuple, bool] = {key: sched.placement(*key).is_public for key in expected}
    finish: Dict[tuple, float] = {
        key: sched.start(*key) + _duration(inst, key[0], key[1], public[key]) for key in expected
    }

    for job, stage in inst.keys:
        entry = sched.get(job, stage)
        placement = entry.placement
        if placement.is_private and not 0 <= placement.replica < dag.replicas[stage]:
            violations.append(Violation(
                "assignment", job, stage, -1.0, f"stage has no replica {placement.replica}"
            ))
        if stage in inst.must_private(job) and placement.is_public:
            violations.append(Violation("privacy", job, stage, -1.0, "must run privately"))
        if not inst.free_placement and placement.is_public:
            for q in dag.successors(stage):
                if not public[(job, q)]:
                    violations.append(Violation(
                        "public_chain", job, q, -1.0, f"private after public stage {stage}"
                    ))
        if entry.start_ms < -tolerance:
            violations.append(Violation("start", job, stage, entry.start_ms))

        j = inst.job(job)
        if not dag.predecessors(stage) and placement.is_public:
            slack = entry.start_ms - j.upload_ms[stage]
            if slack < -tolerance:
                violations.append(Violation("upload", job, stage, slack, "input upload"))
        for p in dag.predecessors(stage):
            delay = edge_delay(public[(job, p)], public[(job, stage)], j.upload_ms[stage], j.download_ms[p])
            slack = entry.start_ms - (finish[(job, p)] + delay)
            if slack < -tolerance:
                violations.append(Violation("precedence", job, stage, slack, f"after stage {p}"))

    for (stage, replica), jobs in sched.replica_sequences().items():
        for prev, nxt in zip(jobs, jobs[1:]):
            slack = sched.start(nxt, stage) - finish[(prev, stage)]
            if slack < -tolerance:
                violations.append(Violation(
                    "sequencing", nxt, stage, slack, f"overlaps job {prev} on replica {replica}"
                ))

    for job in inst.job_ids:
        j = inst.job(job)
        flags = [public[(job, k)] for k in range(dag.stage_count)]
        for k in dag.sinks:
            done = result_time(dag, k, flags, finish[(job, k)], j.download_ms)
            slack = inst.c_max - done
            if slack < -tolerance:
                violations.append(Violation("makespan", job, k, slack))

    return violations
