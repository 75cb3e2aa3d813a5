"""
Simulation events and their processing order
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional


class EventKind(IntEnum):
    """Value is the tie rank between events at the same timestamp."""

    BATCH_ARRIVAL = 0
    PUBLIC_STAGE_COMPLETE = 1
    PRIVATE_STAGE_COMPLETE = 2
    PUBLIC_UPLOAD_COMPLETE = 3
    RESULT_DOWNLOAD_COMPLETE = 4

    @property
    def label(self) -> str:
        return "".join(part.capitalize() for part in self.name.split("_"))


@dataclass(frozen=True)
class SimEvent:
    time_ms: float
    kind: EventKind
    job: int
    stage: int
    replica: Optional[int] = None

    def sort_key(self):
        return (self.time_ms, int(self.kind), self.job, self.stage)

    @property
    def placement(self) -> str:
        if self.kind is EventKind.BATCH_ARRIVAL:
            return "-"
        return "private" if self.kind is EventKind.PRIVATE_STAGE_COMPLETE else "public"

    def trace_line(self) -> str:
        """`time_ms kind job stage placement replica`"""
        replica = "-" if self.replica is None else str(self.replica)
        return f"{self.time_ms:.6f} {self.kind.label} {self.job} {self.stage} {self.placement} {replica}"
