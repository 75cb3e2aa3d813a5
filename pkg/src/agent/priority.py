"""
Priority orders and the per-stage queues that use them

Keys are computed once per batch from whole-job aggregates:
- SPT: total private runtime, shortest at the head
- HCF: total public cost, most expensive at the head
- FIFO: arrival index (test baseline)
Ties always go to the smaller JobId.
"""

import bisect
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from src.errors import ConfigurationError, ConsistencyError
from src.models.cost import DEFAULT_COST_MODEL, CostModel, job_private_runtime, job_public_cost
from src.models.dag import AppDag
from src.models.job import Job


class PriorityOrder(str, Enum):
    SPT = "spt"
    HCF = "hcf"
    FIFO = "fifo"

    @staticmethod
    def parse(text: str) -> "PriorityOrder":
        try:
            return PriorityOrder(text.strip().lower())
        except ValueError:
            raise ConfigurationError(f"unknown priority order {text!r} (spt, hcf, fifo)") from None


def priority_keys(
    batch: Sequence[Job], dag: AppDag, order: PriorityOrder, cm: CostModel = DEFAULT_COST_MODEL
) -> Dict[int, float]:
    if order is PriorityOrder.SPT:
        return {job.id: job_private_runtime(job) for job in batch}
    if order is PriorityOrder.HCF:
        return {job.id: job_public_cost(job, dag, cm) for job in batch}
    return {job.id: float(index) for index, job in enumerate(batch)}


def sort_key(order: PriorityOrder, key: float, job: int) -> Tuple[float, int]:
    return (-key, job) if order is PriorityOrder.HCF else (key, job)


def priority_sequence(keys: Dict[int, float], order: PriorityOrder) -> List[int]:
    """All jobs, head first."""
    return sorted(keys, key=lambda job: sort_key(order, keys[job], job))


class StageQueue:
    """
    Sorted queue of jobs waiting for one stage.

    The head is index 0. Offloading consumes jobs from anywhere, the
    dispatcher only from the head.
    """

    def __init__(self, stage: int, order: PriorityOrder, keys: Dict[int, float]):
        self.stage = stage
        self.order = order
        self._keys = keys
        self._entries: List[Tuple[Tuple[float, int], int]] = []
        self._members = set()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, job: int) -> bool:
        return job in self._members

    def __iter__(self) -> Iterator[int]:
        return iter(self.jobs())

    def jobs(self) -> List[int]:
        return [job for _, job in self._entries]

    def insert(self, job: int) -> None:
        if job in self._members:
            raise ConsistencyError(f"job {job} is already queued at stage {self.stage}")
        bisect.insort(self._entries, (sort_key(self.order, self._keys[job], job), job))
        self._members.add(job)

    def remove(self, job: int) -> None:
        if job not in self._members:
            raise ConsistencyError(f"job {job} is not queued at stage {self.stage}")
        index = bisect.bisect_left(self._entries, (sort_key(self.order, self._keys[job], job), job))
        del self._entries[index]
        self._members.discard(job)

    def discard(self, job: int) -> None:
        if job in self._members:
            self.remove(job)

    def head(self) -> Optional[int]:
        return self._entries[0][1] if self._entries else None

    def pop_head(self) -> Optional[int]:
        if not self._entries:
            return None
        _, job = self._entries.pop(0)
        self._members.discard(job)
        return job
