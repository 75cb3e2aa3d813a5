"""
Repository - Index of the runs written to an output directory

Stores one record per run in runs.json so results can be found again.
The file is sorted and carries no timestamps, so repeating a command
leaves it byte-identical.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional


def run_id(command: str, arguments: Dict[str, str]) -> str:
    """Stable id derived from the command and its arguments"""
    payload = json.dumps({"command": command, "arguments": arguments}, sort_keys=True)
    return hashlib.md5(payload.encode("utf-8")).hexdigest()[:12]


@dataclass
class RunRecord:
    """One CLI run: what was asked and which files it produced"""

    id: str
    command: str
    arguments: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    summary: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "command": self.command,
            "arguments": dict(self.arguments),
            "outputs": sorted(self.outputs),
            "summary": dict(self.summary),
        }

    @staticmethod
    def from_dict(data: dict) -> "RunRecord":
        return RunRecord(
            id=data["id"],
            command=data["command"],
            arguments=data.get("arguments", {}),
            outputs=data.get("outputs", []),
            summary=data.get("summary", {}),
        )


class RunRepository:
    """
    Manages reading and writing run records to a JSON file.
    """

    def __init__(self, out_dir: str = "data"):
        self.out_dir = out_dir
        self.runs_file = os.path.join(out_dir, "runs.json")
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def load_all(self) -> List[RunRecord]:
        """
        Load all run records from disk.

        Returns:
            List of RunRecord objects (empty if the index is missing or unreadable)
        """
        if not os.path.exists(self.runs_file):
            return []

        try:
            with open(self.runs_file, "r") as f:
                data = json.load(f)
            return [RunRecord.from_dict(run) for run in data]
        except (json.JSONDecodeError, IOError, KeyError):
            return []

    def save(self, record: RunRecord) -> None:
        """
        Save a single run record (adds or replaces).

        Args:
            record: RunRecord to save
        """
        runs = self.load_all()

        existing_idx = next((i for i, r in enumerate(runs) if r.id == record.id), None)

        if existing_idx is not None:
            runs[existing_idx] = record
        else:
            runs.append(record)

        self._write_all(runs)

    def get_by_id(self, rid: str) -> Optional[RunRecord]:
        return next((r for r in self.load_all() if r.id == rid), None)

    def get_by_command(self, command: str) -> List[RunRecord]:
        return [r for r in self.load_all() if r.command == command]

    def _write_all(self, runs: List[RunRecord]) -> None:
        """Internal: write all records to disk, sorted by id"""
        with open(self.runs_file, "w") as f:
            json.dump(
                [r.to_dict() for r in sorted(runs, key=lambda r: r.id)],
                f,
                indent=2,
                sort_keys=True,
            )
            f.write("\n")
