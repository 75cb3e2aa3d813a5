"""
Schedule Model - Where and when every (job, stage) pair runs

The greedy scheduler, the simulator and the exact solver all speak this type.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from src.errors import InputFormatError


@dataclass(frozen=True, order=True)
class Placement:
    """Private(replica) or Public. `replica is None` means public."""

    replica: Optional[int] = None

    @staticmethod
    def private(replica: int) -> "Placement":
        return Placement(int(replica))

    @staticmethod
    def public() -> "Placement":
        return PUBLIC

    @property
    def is_public(self) -> bool:
        return self.replica is None

    @property
    def is_private(self) -> bool:
        return self.replica is not None

    def __str__(self) -> str:
        return "public" if self.is_public else f"private:{self.replica}"

    @staticmethod
    def parse(text: str) -> "Placement":
        text = text.strip()
        if text == "public":
            return PUBLIC
        if text.startswith("private:"):
            try:
                return Placement.private(int(text.split(":", 1)[1]))
            except ValueError:
                pass
        raise InputFormatError(f"bad placement {text!r} (expected 'public' or 'private:<replica>')")


PUBLIC = Placement()


@dataclass(frozen=True)
class ScheduleEntry:
    job: int
    stage: int
    placement: Placement
    start_ms: float


@dataclass(frozen=True)
class Schedule:
    """
    A full assignment: one entry per (job, stage).

    Per-replica sequences are not stored; they follow from start times
    (ties broken by JobId).
    """

    entries: Dict[Tuple[int, int], ScheduleEntry] = field(default_factory=dict)

    @staticmethod
    def from_entries(entries: Iterable[ScheduleEntry]) -> "Schedule":
        table: Dict[Tuple[int, int], ScheduleEntry] = {}
        for entry in entries:
            key = (entry.job, entry.stage)
            if key in table:
                raise InputFormatError(f"job {entry.job} stage {entry.stage} scheduled twice")
            table[key] = entry
        return Schedule(table)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ScheduleEntry]:
        for key in sorted(self.entries):
            yield self.entries[key]

    def __contains__(self, key: Tuple[int, int]) -> bool:
        return key in self.entries

    def get(self, job: int, stage: int) -> ScheduleEntry:
        return self.entries[(job, stage)]

    def placement(self, job: int, stage: int) -> Placement:
        return self.entries[(job, stage)].placement

    def start(self, job: int, stage: int) -> float:
        return self.entries[(job, stage)].start_ms

    def jobs(self) -> List[int]:
        return sorted({job for job, _ in self.entries})

    def public_pairs(self) -> List[Tuple[int, int]]:
        return sorted(key for key, e in self.entries.items() if e.placement.is_public)

    def replica_sequences(self) -> Dict[Tuple[int, int], List[int]]:
        """(stage, replica) -> jobs in execution order."""
        lanes: Dict[Tuple[int, int], List[ScheduleEntry]] = {}
        for entry in self.entries.values():
            if entry.placement.is_private:
                lanes.setdefault((entry.stage, entry.placement.replica), []).append(entry)
        return {
            lane: [e.job for e in sorted(items, key=lambda e: (e.start_ms, e.job))]
            for lane, items in sorted(lanes.items())
        }

    def is_empty(self) -> bool:
        return not self.entries
