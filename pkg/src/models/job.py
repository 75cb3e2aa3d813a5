"""
Job Model - One member of a batch and the latency tables built from jobs

A Job carries the latencies the scheduler believes in (estimates).
A LatencyTable carries latencies for a whole batch; the simulator uses one
as the ground truth, which may differ from the estimates.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Optional, Sequence, Tuple

from src.errors import DomainError
from src.models.dag import AppDag


@dataclass(frozen=True)
class StageLatency:
    """Latencies of one (job, stage) pair, in milliseconds."""

    private_ms: float
    public_ms: float
    upload_ms: float
    download_ms: float


@dataclass(frozen=True)
class Job:
    """
    One end-to-end execution of the application DAG.

    Attributes:
        id: JobId, dense within the batch
        p_private: per-stage private latency
        p_public: per-stage public latency, startup included
        upload_ms: per-stage latency to move the stage input to the public cloud
        download_ms: per-stage latency to bring the stage output back
        must_private: stages this job may never offload
        features: per-stage feature vectors (only prediction uses them)
    """

    id: int
    p_private: Tuple[float, ...]
    p_public: Tuple[float, ...]
    upload_ms: Tuple[float, ...]
    download_ms: Tuple[float, ...]
    must_private: FrozenSet[int] = frozenset()
    features: Tuple[Tuple[float, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "p_private", tuple(float(x) for x in self.p_private))
        object.__setattr__(self, "p_public", tuple(float(x) for x in self.p_public))
        object.__setattr__(self, "upload_ms", tuple(float(x) for x in self.upload_ms))
        object.__setattr__(self, "download_ms", tuple(float(x) for x in self.download_ms))
        object.__setattr__(self, "must_private", frozenset(int(k) for k in self.must_private))
        object.__setattr__(self, "features", tuple(tuple(float(v) for v in f) for f in self.features))
        error = self._validate()
        if error:
            raise DomainError(f"job {self.id}: {error}")

    def _validate(self) -> Optional[str]:
        size = len(self.p_private)
        if size == 0:
            return "no stages"
        for name in ("p_public", "upload_ms", "download_ms"):
            if len(getattr(self, name)) != size:
                return f"{name} has {len(getattr(self, name))} entries, expected {size}"
        if any(not x > 0 for x in self.p_private + self.p_public):
            return "stage latencies must be positive"
        if any(x < 0 for x in self.upload_ms + self.download_ms):
            return "transfer latencies must be non-negative"
        if any(not 0 <= k < size for k in self.must_private):
            return "must_private references an unknown stage"
        if self.features and len(self.features) != size:
            return f"features cover {len(self.features)} stages, expected {size}"
        return None

    @property
    def stage_count(self) -> int:
        return len(self.p_private)

    def latency(self, k: int) -> StageLatency:
        return StageLatency(self.p_private[k], self.p_public[k], self.upload_ms[k], self.download_ms[k])

    def fits(self, dag: AppDag) -> bool:
        return self.stage_count == dag.stage_count

    def with_latencies(self, table: "LatencyTable") -> "Job":
        """Copy of this job whose latencies come from `table`."""
        rows = [table.get(self.id, k) for k in range(self.stage_count)]
        return Job(
            id=self.id,
            p_private=[r.private_ms for r in rows],
            p_public=[r.public_ms for r in rows],
            upload_ms=[r.upload_ms for r in rows],
            download_ms=[r.download_ms for r in rows],
            must_private=self.must_private,
            features=self.features,
        )


@dataclass(frozen=True)
class LatencyTable:
    """
    Per (job, stage) latencies for a batch.

    Used both as the simulator's truth and as the scheduler's estimates.
    """

    rows: Dict[Tuple[int, int], StageLatency] = field(default_factory=dict)

    def get(self, job: int, stage: int) -> StageLatency:
        return self.rows[(job, stage)]

    def private_ms(self, job: int, stage: int) -> float:
        return self.rows[(job, stage)].private_ms

    def public_ms(self, job: int, stage: int) -> float:
        return self.rows[(job, stage)].public_ms

    def upload_ms(self, job: int, stage: int) -> float:
        return self.rows[(job, stage)].upload_ms

    def download_ms(self, job: int, stage: int) -> float:
        return self.rows[(job, stage)].download_ms

    def validate(self) -> Optional[str]:
        for (job, stage), row in self.rows.items():
            if not (row.private_ms > 0 and row.public_ms > 0):
                return f"job {job} stage {stage}: latencies must be strictly positive"
            if row.upload_ms < 0 or row.download_ms < 0:
                return f"job {job} stage {stage}: transfer latencies must be non-negative"
        return None

    def covers(self, batch: Sequence[Job]) -> bool:
        return all((job.id, k) in self.rows for job in batch for k in range(job.stage_count))

    @staticmethod
    def from_jobs(batch: Sequence[Job]) -> "LatencyTable":
        return LatencyTable({(job.id, k): job.latency(k) for job in batch for k in range(job.stage_count)})


TruthTable = LatencyTable
