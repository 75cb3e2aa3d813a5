"""
Exact-solver instance - the batch, the deadline and everything derived from them
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Tuple

from src.errors import DomainError
from src.models.cost import DEFAULT_COST_MODEL, CostModel, stage_cost
from src.models.dag import AppDag
from src.models.job import Job

Key = Tuple[int, int]


@dataclass(frozen=True)
class MilpInstance:
    """
    Attributes:
        dag: application template
        jobs: batch, sorted by JobId
        c_max: deadline relative to t0 = 0
        free_placement: allow private stages after public ones
        h: public cost per (job, stage)
        q_seq: big constant of the sequencing disjunction
        m_ind: big constant of the transfer indicator
    """

    dag: AppDag
    jobs: Tuple[Job, ...]
    c_max: float
    cost_model: CostModel = DEFAULT_COST_MODEL
    free_placement: bool = False
    h: Dict[Key, float] = field(init=False, repr=False, compare=False)
    q_seq: float = field(init=False, repr=False, compare=False)
    m_ind: int = field(init=False, repr=False, compare=False)
    _by_id: Dict[int, Job] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        jobs = tuple(sorted(self.jobs, key=lambda job: job.id))
        object.__setattr__(self, "jobs", jobs)
        if not jobs:
            raise DomainError("instance has no jobs")
        if not (self.c_max > 0 and math.isfinite(self.c_max)):
            raise DomainError(f"c_max must be positive and finite, got {self.c_max}")
        for job in jobs:
            if not job.fits(self.dag):
                raise DomainError(f"job {job.id} has {job.stage_count} stages, DAG has {self.dag.stage_count}")

        object.__setattr__(self, "_by_id", {job.id: job for job in jobs})
        object.__setattr__(self, "h", {
            (job.id, k): stage_cost(job, k, self.dag, self.cost_model)
            for job in jobs for k in range(self.dag.stage_count)
        })
        longest = max(max(job.p_private + job.p_public + job.upload_ms + job.download_ms) for job in jobs)
        object.__setattr__(self, "q_seq", len(jobs) * self.dag.stage_count * longest + self.c_max + 1.0)
        object.__setattr__(self, "m_ind", max(self.dag.out_degree) + 1)

    @property
    def job_ids(self) -> List[int]:
        return [job.id for job in self.jobs]

    @property
    def keys(self) -> List[Key]:
        """Every (job, stage) in canonical order."""
        return [(job.id, k) for job in self.jobs for k in range(self.dag.stage_count)]

    def job(self, job_id: int) -> Job:
        return self._by_id[job_id]

    def must_private(self, job_id: int) -> FrozenSet[int]:
        return self._by_id[job_id].must_private | self.dag.default_must_private

    def total_cost(self) -> float:
        return self.savings_of(self.keys)

    def savings_of(self, private_keys) -> float:
        """Sum of H over `private_keys`, added in canonical order."""
        total = 0.0
        for key in sorted(private_keys):
            total += self.h[key]
        return total

    def public_cost_of(self, public_keys) -> float:
        return self.savings_of(public_keys)

    def admissible_public_sets(self, job_id: int) -> List[FrozenSet[int]]:
        """
        Public stage sets a job may take.

        Must-private stages are never public. Without free placement the
        public set is closed under DAG descendants.
        """
        pinned = self.must_private(job_id)
        stages = [k for k in range(self.dag.stage_count) if k not in pinned]
        options = []
        for size in range(len(stages) + 1):
            for combo in itertools.combinations(stages, size):
                public = frozenset(combo)
                if not self.free_placement and any(
                    q not in public for k in public for q in self.dag.descendants(k)
                ):
                    continue
                options.append(public)
        return options
