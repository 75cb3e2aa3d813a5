"""
Transfers - When data has to cross between the private and public cloud

Shared by the simulator, the schedule verifier and the exact search so the
three agree on timing.

Rules, for one job:
- a public source stage waits for its input upload: release = t0 + U[k]
- on an edge p -> q, a private p feeding a public q costs U[q],
  a public p feeding a private q costs D[p], same-side edges cost nothing
- a public sink is only stored once its result is downloaded: + D[k]
"""

from typing import List, Optional, Sequence, Tuple

from src.models.dag import AppDag


def edge_delay(p_public: bool, q_public: bool, upload_q: float, download_p: float) -> float:
    if not p_public and q_public:
        return upload_q
    if p_public and not q_public:
        return download_p
    return 0.0


def stage_release(
    dag: AppDag,
    k: int,
    public: Sequence[bool],
    finish: Sequence[Optional[float]],
    upload: Sequence[float],
    download: Sequence[float],
    t0: float = 0.0,
) -> float:
    """
    Earliest start of stage k allowed by precedence and transfers.

    All predecessors of k must already have a finish time.
    """
    preds = dag.predecessors(k)
    if not preds:
        return t0 + (upload[k] if public[k] else 0.0)
    release = t0
    for p in preds:
        candidate = finish[p] + edge_delay(public[p], public[k], upload[k], download[p])
        if candidate > release:
            release = candidate
    return release


def result_time(dag: AppDag, k: int, public: Sequence[bool], finish_k: float, download: Sequence[float]) -> float:
    """When stage k's output is safely stored (only differs for public sinks)."""
    if public[k] and not dag.successors(k):
        return finish_k + download[k]
    return finish_k


def tail_after(
    dag: AppDag,
    public: Sequence[bool],
    durations: Sequence[float],
    upload: Sequence[float],
    download: Sequence[float],
) -> List[float]:
    """
    Minimum time from the finish of each stage until the job's last result
    is stored, ignoring any queueing.
    """
    tail = [0.0] * dag.stage_count
    for k in reversed(dag.topological_order):
        succ = dag.successors(k)
        if not succ:
            tail[k] = download[k] if public[k] else 0.0
            continue
        tail[k] = max(
            edge_delay(public[k], public[q], upload[q], download[k]) + durations[q] + tail[q]
            for q in succ
        )
    return tail


def transfer_indicators(dag: AppDag, public: Sequence[bool]) -> List[Tuple[int, int, int]]:
    """
    Per stage (X, u, d) with X = delta_p * e_p - sum over successors of e_q,
    e = 1 for private. X > 0 means results must go up, X < 0 means down.
    """
    rows = []
    for p in range(dag.stage_count):
        e_p = 0 if public[p] else 1
        x = dag.out_degree[p] * e_p - sum(0 if public[q] else 1 for q in dag.successors(p))
        rows.append((x, 1 if x > 0 else 0, 1 if x < 0 else 0))
    return rows
