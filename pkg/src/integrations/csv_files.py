"""
CSV Files - Read and write workloads, traces, schedules and result tables

Every writer emits rows in a fixed order with round-trip float formatting,
so the same inputs always produce byte-identical files.
"""

import csv
import os
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from src.agent.scheduler import OffloadRecord
from src.errors import InputFormatError
from src.models.job import Job, LatencyTable, StageLatency
from src.models.schedule import PUBLIC, Placement, Schedule, ScheduleEntry
from src.predict.stage_models import PRIVATE, PUBLIC as PUBLIC_LOCATION, TraceRow

LATENCY_FIELDS = ["job_id", "stage", "p_private_ms", "p_public_ms", "upload_ms", "download_ms"]
TRACE_FIELDS = ["job_id", "stage", "location", "latency_ms"]
SCHEDULE_FIELDS = ["job", "stage", "placement", "replica", "start_ms"]
OFFLOAD_FIELDS = ["time_ms", "job_id", "stage", "reason"]


def _num(value: float) -> str:
    return repr(float(value))


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def _write(path: str, fields: Sequence[str], rows: Iterable[Dict[str, str]]) -> None:
    _ensure_parent(path)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(fields), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _read(path: str, required: Sequence[str]) -> List[Tuple[int, Dict[str, str]]]:
    """Rows with their 1-based file line numbers."""
    if not os.path.exists(path):
        raise InputFormatError("file not found", path)
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = [name for name in required if name not in (reader.fieldnames or [])]
        if missing:
            raise InputFormatError(f"missing columns {missing}", path, 1)
        return [(index + 2, row) for index, row in enumerate(reader)]


def _float(row: Dict[str, str], name: str, path: str, line: int) -> float:
    try:
        return float(row[name])
    except (TypeError, ValueError):
        raise InputFormatError(f"{name}: {row.get(name)!r} is not a number", path, line) from None


def _int(row: Dict[str, str], name: str, path: str, line: int) -> int:
    try:
        return int(row[name])
    except (TypeError, ValueError):
        raise InputFormatError(f"{name}: {row.get(name)!r} is not an integer", path, line) from None


def _numbered(row: Dict[str, str], prefix: str, path: str, line: int) -> Tuple[float, ...]:
    """Non-empty values of the prefix0, prefix1, .. columns."""
    values = []
    i = 0
    while f"{prefix}{i}" in row:
        if row[f"{prefix}{i}"]:
            values.append(_float(row, f"{prefix}{i}", path, line))
        i += 1
    return tuple(values)


# -- workload -------------------------------------------------------------------------

def write_workload_csv(batch: Sequence[Job], path: str) -> None:
    """Long format: one row per (job, stage), features as feature_0.. columns."""
    width = max((len(f) for job in batch for f in job.features), default=0)
    fields = LATENCY_FIELDS + [f"feature_{i}" for i in range(width)]
    rows = []
    for job in sorted(batch, key=lambda j: j.id):
        for k in range(job.stage_count):
            row = {
                "job_id": str(job.id),
                "stage": str(k),
                "p_private_ms": _num(job.p_private[k]),
                "p_public_ms": _num(job.p_public[k]),
                "upload_ms": _num(job.upload_ms[k]),
                "download_ms": _num(job.download_ms[k]),
            }
            features = job.features[k] if job.features else ()
            for i in range(width):
                row[f"feature_{i}"] = _num(features[i]) if i < len(features) else ""
            rows.append(row)
    _write(path, fields, rows)


def read_workload_csv(path: str, must_private: Optional[Dict[int, Iterable[int]]] = None) -> List[Job]:
    rows = _read(path, LATENCY_FIELDS)
    per_job: Dict[int, Dict[int, Tuple[StageLatency, Tuple[float, ...]]]] = {}
    for line, row in rows:
        job = _int(row, "job_id", path, line)
        stage = _int(row, "stage", path, line)
        latency = StageLatency(
            _float(row, "p_private_ms", path, line),
            _float(row, "p_public_ms", path, line),
            _float(row, "upload_ms", path, line),
            _float(row, "download_ms", path, line),
        )
        if stage in per_job.setdefault(job, {}):
            raise InputFormatError(f"job {job} stage {stage} listed twice", path, line)
        per_job[job][stage] = (latency, _numbered(row, "feature_", path, line))

    batch = []
    for job, stages in sorted(per_job.items()):
        if sorted(stages) != list(range(len(stages))):
            raise InputFormatError(f"job {job} does not list stages 0..{len(stages) - 1}", path)
        ordered = [stages[k] for k in range(len(stages))]
        has_features = any(f for _, f in ordered)
        batch.append(Job(
            id=job,
            p_private=[lat.private_ms for lat, _ in ordered],
            p_public=[lat.public_ms for lat, _ in ordered],
            upload_ms=[lat.upload_ms for lat, _ in ordered],
            download_ms=[lat.download_ms for lat, _ in ordered],
            must_private=(must_private or {}).get(job, ()),
            features=[f for _, f in ordered] if has_features else (),
        ))
    if not batch:
        raise InputFormatError("workload is empty", path)
    return batch


def write_latency_csv(table: LatencyTable, path: str) -> None:
    _write(path, LATENCY_FIELDS, (
        {
            "job_id": str(job),
            "stage": str(stage),
            "p_private_ms": _num(row.private_ms),
            "p_public_ms": _num(row.public_ms),
            "upload_ms": _num(row.upload_ms),
            "download_ms": _num(row.download_ms),
        }
        for (job, stage), row in sorted(table.rows.items())
    ))


def read_latency_csv(path: str) -> LatencyTable:
    """Truth (or estimate) table; feature columns, if any, are ignored."""
    rows = {}
    for line, row in _read(path, LATENCY_FIELDS):
        key = (_int(row, "job_id", path, line), _int(row, "stage", path, line))
        if key in rows:
            raise InputFormatError(f"job {key[0]} stage {key[1]} listed twice", path, line)
        rows[key] = StageLatency(
            _float(row, "p_private_ms", path, line),
            _float(row, "p_public_ms", path, line),
            _float(row, "upload_ms", path, line),
            _float(row, "download_ms", path, line),
        )
    table = LatencyTable(rows)
    problem = table.validate()
    if problem:
        raise InputFormatError(problem, path)
    return table


# -- training trace -------------------------------------------------------------------

def write_trace_csv(rows: Sequence[TraceRow], path: str) -> None:
    """Long format: features as feature_0.. before latency_ms, outputs as output_feature_0.. after it."""
    width = max((len(r.features) for r in rows), default=0)
    out_width = max((len(r.output_features) for r in rows), default=0)
    fields = (
        TRACE_FIELDS[:3]
        + [f"feature_{i}" for i in range(width)]
        + ["latency_ms"]
        + [f"output_feature_{i}" for i in range(out_width)]
        + ["overhead_ms"]
    )
    table = []
    for r in rows:
        row = {
            "job_id": str(r.job_id),
            "stage": str(r.stage),
            "location": r.location,
            "latency_ms": _num(r.latency_ms),
            "overhead_ms": "" if r.overhead_ms is None else _num(r.overhead_ms),
        }
        for i in range(width):
            row[f"feature_{i}"] = _num(r.features[i]) if i < len(r.features) else ""
        for i in range(out_width):
            row[f"output_feature_{i}"] = _num(r.output_features[i]) if i < len(r.output_features) else ""
        table.append(row)
    _write(path, fields, table)


def read_trace_csv(path: str) -> List[TraceRow]:
    """overhead_ms is optional; traces without it are accepted."""
    result = []
    for line, row in _read(path, TRACE_FIELDS):
        location = row["location"].strip()
        if location not in (PRIVATE, PUBLIC_LOCATION):
            raise InputFormatError(f"location must be private or public, got {location!r}", path, line)
        overhead = row.get("overhead_ms") or ""
        result.append(TraceRow(
            job_id=_int(row, "job_id", path, line),
            stage=_int(row, "stage", path, line),
            location=location,
            features=_numbered(row, "feature_", path, line),
            latency_ms=_float(row, "latency_ms", path, line),
            output_features=_numbered(row, "output_feature_", path, line),
            overhead_ms=_float(row, "overhead_ms", path, line) if overhead else None,
        ))
    return result


# -- schedules and logs ---------------------------------------------------------------

def write_schedule_csv(schedule: Schedule, path: str) -> None:
    _write(path, SCHEDULE_FIELDS, (
        {
            "job": str(entry.job),
            "stage": str(entry.stage),
            "placement": "public" if entry.placement.is_public else "private",
            "replica": "" if entry.placement.is_public else str(entry.placement.replica),
            "start_ms": _num(entry.start_ms),
        }
        for entry in schedule
    ))


def read_schedule_csv(path: str) -> Schedule:
    entries = []
    for line, row in _read(path, SCHEDULE_FIELDS):
        kind = row["placement"].strip()
        if kind == "public":
            placement = PUBLIC
        elif kind == "private":
            placement = Placement.private(_int(row, "replica", path, line))
        else:
            raise InputFormatError(f"placement must be private or public, got {kind!r}", path, line)
        entries.append(ScheduleEntry(
            _int(row, "job", path, line), _int(row, "stage", path, line), placement,
            _float(row, "start_ms", path, line),
        ))
    try:
        return Schedule.from_entries(entries)
    except InputFormatError as e:
        raise InputFormatError(str(e), path) from None


def write_offload_csv(records: Sequence[OffloadRecord], path: str) -> None:
    _write(path, OFFLOAD_FIELDS, (
        {"time_ms": _num(r.time_ms), "job_id": str(r.job), "stage": str(r.stage), "reason": r.reason}
        for r in records
    ))


def write_rows_csv(fields: Sequence[str], rows: Iterable[Dict[str, str]], path: str) -> None:
    """Any table whose rows are already formatted (sweep rows, report rows)."""
    _write(path, fields, rows)


def write_lines(lines: Iterable[str], path: str) -> None:
    _ensure_parent(path)
    with open(path, "w") as f:
        for line in lines:
            f.write(line + "\n")
