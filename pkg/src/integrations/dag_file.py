"""
DAG File - Read and write the line-oriented application format

    stage <name> replicas=<int> mem_mb=<num>     (one per stage, in index order)
    edge <src_name> <dst_name>
    must_private <stage_name>                    (optional, applies to every job)

Blank lines and lines starting with '#' are ignored.
"""

from typing import Dict, List, Optional, Tuple

from src.errors import DagValidationError, InputFormatError
from src.models.dag import AppDag

_SECTIONS = {"stage": 0, "edge": 1, "must_private": 2}


def parse_dag_text(text: str, path: Optional[str] = None) -> AppDag:
    names: List[str] = []
    replicas: List[int] = []
    memory: List[float] = []
    edges: List[Tuple[int, int]] = []
    must_private: List[int] = []
    index: Dict[str, int] = {}
    section = 0

    def stage_ref(name: str, lineno: int) -> int:
        if name not in index:
            raise InputFormatError(f"unknown stage {name!r}", path, lineno)
        return index[name]

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        keyword = parts[0]
        if keyword not in _SECTIONS:
            raise InputFormatError(f"unknown directive {keyword!r}", path, lineno)
        if _SECTIONS[keyword] < section:
            raise InputFormatError(f"'{keyword}' lines must come before later sections", path, lineno)
        section = _SECTIONS[keyword]

        if keyword == "stage":
            if len(parts) != 4:
                raise InputFormatError("expected: stage <name> replicas=<int> mem_mb=<num>", path, lineno)
            name = parts[1]
            if name in index:
                raise InputFormatError(f"stage {name!r} declared twice", path, lineno)
            fields = dict(p.split("=", 1) for p in parts[2:] if "=" in p)
            if set(fields) != {"replicas", "mem_mb"}:
                raise InputFormatError("stage needs replicas=<int> and mem_mb=<num>", path, lineno)
            try:
                count = int(fields["replicas"])
                mem = float(fields["mem_mb"])
            except ValueError:
                raise InputFormatError("replicas must be an integer and mem_mb a number", path, lineno) from None
            index[name] = len(names)
            names.append(name)
            replicas.append(count)
            memory.append(mem)
        elif keyword == "edge":
            if len(parts) != 3:
                raise InputFormatError("expected: edge <src_name> <dst_name>", path, lineno)
            edges.append((stage_ref(parts[1], lineno), stage_ref(parts[2], lineno)))
        else:
            if len(parts) != 2:
                raise InputFormatError("expected: must_private <stage_name>", path, lineno)
            must_private.append(stage_ref(parts[1], lineno))

    if not names:
        raise InputFormatError("no stages declared", path)
    try:
        return AppDag(tuple(names), tuple(edges), tuple(replicas), tuple(memory), frozenset(must_private))
    except DagValidationError as e:
        raise InputFormatError(str(e), path) from e


def format_dag_text(dag: AppDag) -> str:
    lines = [
        f"stage {name} replicas={dag.replicas[k]} mem_mb={_number(dag.memory_mb[k])}"
        for k, name in enumerate(dag.names)
    ]
    lines += [f"edge {dag.names[p]} {dag.names[q]}" for p, q in dag.edges]
    lines += [f"must_private {dag.names[k]}" for k in sorted(dag.default_must_private)]
    return "\n".join(lines) + "\n"


def load_dag(path: str) -> AppDag:
    with open(path, "r") as f:
        return parse_dag_text(f.read(), path)


def save_dag(dag: AppDag, path: str) -> None:
    with open(path, "w") as f:
        f.write(format_dag_text(dag))


def _number(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text
