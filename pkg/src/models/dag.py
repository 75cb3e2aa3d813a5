"""
Application DAG - The template every job of a batch follows

Stages are dense integers 0..K-1. Each stage has a display name, a number of
private replicas and the memory configuration used when it runs publicly.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from src.errors import DagValidationError

Edge = Tuple[int, int]


def check_dag_parts(
    stage_count: int,
    edges: Iterable[Edge],
    replicas: Optional[Sequence[int]] = None,
    memory_mb: Optional[Sequence[float]] = None,
    out_degree: Optional[Sequence[int]] = None,
) -> Optional[DagValidationError]:
    """
    Check the structural rules of an application DAG.

    Args:
        stage_count: K
        edges: ordered (source, destination) stage pairs
        replicas: per-stage I_k, checked when given
        memory_mb: per-stage memory, checked when given
        out_degree: claimed per-stage out degree, recounted when given

    Returns:
        None when the DAG is valid, otherwise the error (not raised)
    """
    if stage_count < 1:
        return DagValidationError("stage", "an application needs at least one stage")

    edge_list = list(edges)
    for src, dst in edge_list:
        if not (0 <= src < stage_count and 0 <= dst < stage_count):
            return DagValidationError("edge", f"edge ({src}, {dst}) references an unknown stage")
        if src == dst:
            return DagValidationError("cycle", f"stage {src} depends on itself")

    if replicas is not None:
        if len(replicas) != stage_count:
            return DagValidationError("stage", f"expected {stage_count} replica counts, got {len(replicas)}")
        for k, count in enumerate(replicas):
            if count < 1:
                return DagValidationError("stage", f"stage {k} needs at least one replica")

    if memory_mb is not None:
        if len(memory_mb) != stage_count:
            return DagValidationError("stage", f"expected {stage_count} memory configs, got {len(memory_mb)}")
        for k, mem in enumerate(memory_mb):
            if not mem > 0:
                return DagValidationError("stage", f"stage {k} memory must be positive")

    graph = nx.DiGraph()
    graph.add_nodes_from(range(stage_count))
    graph.add_edges_from(edge_list)

    if not nx.is_directed_acyclic_graph(graph):
        cycle = nx.find_cycle(graph)
        path = " -> ".join(str(src) for src, _ in cycle)
        return DagValidationError("cycle", f"cycle through stages {path}")

    if stage_count > 1 and not nx.is_weakly_connected(graph):
        isolated = sorted(k for k in graph.nodes if graph.degree(k) == 0)
        detail = f"isolated stages {isolated}" if isolated else "graph has disconnected parts"
        return DagValidationError("reachability", detail)

    if out_degree is not None:
        for k in range(stage_count):
            if out_degree[k] != graph.out_degree(k):
                return DagValidationError(
                    "out_degree", f"stage {k} declares {out_degree[k]} but has {graph.out_degree(k)}"
                )

    return None


@dataclass(frozen=True)
class AppDag:
    """
    Immutable application template.

    Attributes:
        names: display name per stage, in StageId order
        edges: precedence pairs (p, q), sorted
        replicas: private replica count I_k per stage
        memory_mb: public memory configuration M_k per stage
        default_must_private: stages every job must keep private
    """

    names: Tuple[str, ...]
    edges: Tuple[Edge, ...]
    replicas: Tuple[int, ...]
    memory_mb: Tuple[float, ...]
    default_must_private: FrozenSet[int] = frozenset()
    _succ: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    _pred: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    _topo: Tuple[int, ...] = field(init=False, repr=False, compare=False)
    _graph: nx.DiGraph = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = tuple(sorted(set((int(p), int(q)) for p, q in self.edges)))
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "replicas", tuple(int(i) for i in self.replicas))
        object.__setattr__(self, "memory_mb", tuple(float(m) for m in self.memory_mb))
        object.__setattr__(self, "default_must_private", frozenset(self.default_must_private))

        problem = check_dag_parts(len(self.names), edges, self.replicas, self.memory_mb)
        if problem is not None:
            raise problem
        for k in self.default_must_private:
            if not 0 <= k < len(self.names):
                raise DagValidationError("stage", f"must_private stage {k} is not in the DAG")

        graph = nx.DiGraph()
        graph.add_nodes_from(range(len(self.names)))
        graph.add_edges_from(edges)
        object.__setattr__(self, "_graph", graph)
        object.__setattr__(self, "_succ", tuple(tuple(sorted(graph.successors(k))) for k in range(len(self.names))))
        object.__setattr__(self, "_pred", tuple(tuple(sorted(graph.predecessors(k))) for k in range(len(self.names))))
        object.__setattr__(self, "_topo", tuple(nx.lexicographical_topological_sort(graph)))

    @staticmethod
    def chain(names: Sequence[str], replicas: Sequence[int], memory_mb: Sequence[float]) -> "AppDag":
        """Linear pipeline 0 -> 1 -> ... -> K-1."""
        edges = [(k, k + 1) for k in range(len(names) - 1)]
        return AppDag(tuple(names), tuple(edges), tuple(replicas), tuple(memory_mb))

    @property
    def stage_count(self) -> int:
        return len(self.names)

    @property
    def out_degree(self) -> Tuple[int, ...]:
        return tuple(len(s) for s in self._succ)

    @property
    def topological_order(self) -> Tuple[int, ...]:
        """Topological order, smallest StageId first among ready stages."""
        return self._topo

    @property
    def sources(self) -> Tuple[int, ...]:
        return tuple(k for k in range(self.stage_count) if not self._pred[k])

    @property
    def sinks(self) -> Tuple[int, ...]:
        return tuple(k for k in range(self.stage_count) if not self._succ[k])

    def successors(self, k: int) -> Tuple[int, ...]:
        return self._succ[k]

    def predecessors(self, k: int) -> Tuple[int, ...]:
        return self._pred[k]

    def descendants(self, k: int) -> Tuple[int, ...]:
        return tuple(sorted(nx.descendants(self._graph, k)))

    def stage_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DagValidationError("stage", f"unknown stage name {name!r}") from None

    def total_replicas(self) -> int:
        return sum(self.replicas)


def longest_path(dag: AppDag, weights: Sequence[float], start: int) -> Tuple[float, List[int]]:
    """
    Heaviest path from `start` to any sink, counting `start` itself.

    Ties go to the successor with the smallest StageId.

    Returns:
        (path weight, stages on the path)
    """
    best: Dict[int, float] = {}
    nxt: Dict[int, Optional[int]] = {}
    for k in reversed(dag.topological_order):
        tail = 0.0
        choice = None
        for q in dag.successors(k):
            if choice is None or best[q] > tail:
                tail = best[q]
                choice = q
        best[k] = weights[k] + tail
        nxt[k] = choice

    path = [start]
    while nxt[path[-1]] is not None:
        path.append(nxt[path[-1]])
    return best[start], path


def longest_path_from(dag: AppDag, weights: Sequence[float], start: int) -> float:
    return longest_path(dag, weights, start)[0]


def validate_dag(dag: AppDag) -> Optional[DagValidationError]:
    """
    Check a built DAG against the structural rules.

    Out degrees are recounted from the edge list. Returns None when the DAG
    is valid, otherwise the first violated rule.
    """
    problem = check_dag_parts(dag.stage_count, dag.edges, dag.replicas, dag.memory_mb, dag.out_degree)
    if problem is not None:
        return problem
    for k in sorted(dag.default_must_private):
        if not 0 <= k < dag.stage_count:
            return DagValidationError("stage", f"must_private stage {k} is not in the DAG")
    return None
