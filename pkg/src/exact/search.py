"""
Exact search - the cheapest schedule that meets the deadline

Two solvers over the same placement space:
- enumerate_exhaustive lists every admissible placement, best savings
  first, and returns the first one with a feasible timing (tiny instances)
- solve_exact branches on one (job, stage) placement at a time, in
  descending public-cost order, and bounds each node with a per-stage
  fractional knapsack over the undecided stages

Savings are always summed in (job, stage) order so both solvers produce
bit-identical values for the same private set.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from src.errors import SizeGuardError
from src.exact.instance import Key, MilpInstance
from src.exact.timing import Timing, find_timing
from src.models.schedule import Schedule

logger = logging.getLogger(__name__)

DEFAULT_NODE_BUDGET = 200_000
EXHAUSTIVE_MAX_PAIRS = 12
EXHAUSTIVE_MAX_REPLICAS = 4
BOUND_TOLERANCE = 1e-12
CAPACITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ExactSolution:
    """
    Attributes:
        schedule: empty when the instance is infeasible
        savings_usd: z, public cost avoided by private stages
        public_cost_usd: cost of the public stages
        optimal: False when the node budget ran out first
        nodes_explored: search nodes (candidates for the exhaustive oracle)
        feasible: False when no schedule meets the deadline
    """

    schedule: Schedule = field(default_factory=Schedule)
    savings_usd: float = 0.0
    public_cost_usd: float = 0.0
    optimal: bool = True
    nodes_explored: int = 0
    feasible: bool = True

    def summary_lines(self) -> List[str]:
        return [
            f"feasible = {str(self.feasible).lower()}",
            f"savings_usd = {self.savings_usd:.12f}",
            f"public_cost_usd = {self.public_cost_usd:.12f}",
            f"public_stages = {len(self.schedule.public_pairs())}",
            f"nodes_explored = {self.nodes_explored}",
            f"optimal = {str(self.optimal).lower()}",
        ]


def _solution(inst: MilpInstance, timing: Timing, nodes: int, optimal: bool) -> ExactSolution:
    schedule = timing.to_schedule()
    private = [key for key in inst.keys if schedule.placement(*key).is_private]
    public = [key for key in inst.keys if schedule.placement(*key).is_public]
    return ExactSolution(schedule, inst.savings_of(private), inst.public_cost_of(public), optimal, nodes, True)


def _infeasible(inst: MilpInstance, nodes: int, optimal: bool) -> ExactSolution:
    return ExactSolution(Schedule(), 0.0, inst.total_cost(), optimal, nodes, False)


def _within_capacity(inst: MilpInstance, private: List[Key]) -> bool:
    work = [0.0] * inst.dag.stage_count
    for job, stage in private:
        work[stage] += inst.job(job).p_private[stage]
    return all(
        work[k] <= inst.dag.replicas[k] * inst.c_max + CAPACITY_TOLERANCE for k in range(inst.dag.stage_count)
    )


def enumerate_exhaustive(inst: MilpInstance) -> ExactSolution:
    """
    Brute-force optimum for tiny instances.

    Ties in savings go to the lexicographically smallest e-matrix
    (e = 1 for private, (job, stage) order).

    Raises:
        SizeGuardError: J * K > 12 or more than 4 replicas in total
    """
    pairs = len(inst.jobs) * inst.dag.stage_count
    if pairs > EXHAUSTIVE_MAX_PAIRS or inst.dag.total_replicas() > EXHAUSTIVE_MAX_REPLICAS:
        raise SizeGuardError(
            f"exhaustive search is limited to {EXHAUSTIVE_MAX_PAIRS} (job, stage) pairs and "
            f"{EXHAUSTIVE_MAX_REPLICAS} replicas, got {pairs} and {inst.dag.total_replicas()}"
        )

    job_ids = inst.job_ids
    candidates = []
    for combo in itertools.product(*(inst.admissible_public_sets(j) for j in job_ids)):
        public = {(j, k): k in stages for j, stages in zip(job_ids, combo) for k in range(inst.dag.stage_count)}
        private = [key for key in inst.keys if not public[key]]
        e_flat = tuple(0 if public[key] else 1 for key in inst.keys)
        candidates.append((-inst.savings_of(private), e_flat, public, private))
    candidates.sort(key=lambda c: (c[0], c[1]))

    for tried, (_, _, public, private) in enumerate(candidates, 1):
        if not _within_capacity(inst, private):
            continue
        timing = find_timing(inst, public)
        if timing is not None:
            return _solution(inst, timing, tried, True)
    return _infeasible(inst, len(candidates), True)


class _BranchAndBound:
    def __init__(self, inst: MilpInstance, node_budget: int):
        self.inst = inst
        self.dag = inst.dag
        self.budget = node_budget
        self.order = sorted(inst.keys, key=lambda key: (-inst.h[key], key))
        self.state: Dict[Key, Optional[bool]] = {key: None for key in inst.keys}
        self.work = [0.0] * self.dag.stage_count
        self.capacity = [self.dag.replicas[k] * inst.c_max for k in range(self.dag.stage_count)]
        self.nodes = 0
        self.exhausted = False
        self.best_z = -math.inf
        self.best: Optional[Timing] = None

    # state changes ------------------------------------------------------------

    def assign(self, key: Key, private: bool, trail: List[Key]) -> bool:
        """Decide `key` and everything the placement rules imply. False on conflict."""
        stack = [(key, private)]
        while stack:
            (job, stage), value = stack.pop()
            current = self.state[(job, stage)]
            if current is not None:
                if current != value:
                    return False
                continue
            if not value and stage in self.inst.must_private(job):
                return False
            self.state[(job, stage)] = value
            trail.append((job, stage))
            if value:
                self.work[stage] += self.inst.job(job).p_private[stage]
            if not self.inst.free_placement:
                if value:
                    stack.extend(((job, p), True) for p in self.dag.predecessors(stage))
                else:
                    stack.extend(((job, q), False) for q in self.dag.successors(stage))
        return True

    def undo(self, trail: List[Key]) -> None:
        for job, stage in reversed(trail):
            if self.state[(job, stage)]:
                self.work[stage] -= self.inst.job(job).p_private[stage]
            self.state[(job, stage)] = None
        trail.clear()

    def capacity_ok(self) -> bool:
        return all(w <= c + CAPACITY_TOLERANCE for w, c in zip(self.work, self.capacity))

    # bounding -----------------------------------------------------------------

    def bound(self) -> float:
        total = 0.0
        undecided: Dict[int, list] = {k: [] for k in range(self.dag.stage_count)}
        for key in self.inst.keys:
            value = self.state[key]
            if value:
                total += self.inst.h[key]
            elif value is None:
                job, stage = key
                undecided[stage].append((self.inst.h[key], self.inst.job(job).p_private[stage]))
        for stage, items in undecided.items():
            room = self.capacity[stage] - self.work[stage]
            for h, p in sorted(items, key=lambda item: -item[0] / item[1]):
                if room <= 0:
                    break
                take = min(1.0, room / p)
                total += h * take
                room -= p * take
        return total

    # search -------------------------------------------------------------------

    def leaf(self) -> None:
        private = [key for key in self.inst.keys if self.state[key]]
        z = self.inst.savings_of(private)
        if self.best is not None and not z > self.best_z:
            return
        timing = find_timing(self.inst, {key: not self.state[key] for key in self.inst.keys})
        if timing is not None:
            self.best_z = z
            self.best = timing
            logger.debug("incumbent z=%.12f after %d nodes", z, self.nodes)

    def visit(self, depth: int) -> None:
        self.nodes += 1
        if self.nodes > self.budget:
            self.exhausted = True
            return
        if self.best is not None and self.bound() < self.best_z - BOUND_TOLERANCE:
            return
        while depth < len(self.order) and self.state[self.order[depth]] is not None:
            depth += 1
        if depth == len(self.order):
            self.leaf()
            return
        key = self.order[depth]
        for private in (True, False):
            trail: List[Key] = []
            if self.assign(key, private, trail) and self.capacity_ok():
                self.visit(depth + 1)
            self.undo(trail)
            if self.exhausted:
                return

    def run(self) -> None:
        base: List[Key] = []
        for job in self.inst.job_ids:
            for stage in sorted(self.inst.must_private(job)):
                self.assign((job, stage), True, base)
        if not self.capacity_ok():
            return

        # smallest private set first: everything not forced stays public
        trial: List[Key] = []
        for key in self.inst.keys:
            if self.state[key] is None:
                self.assign(key, False, trial)
        self.leaf()
        self.undo(trial)

        self.visit(0)


def solve_exact(inst: MilpInstance, node_budget: int = DEFAULT_NODE_BUDGET) -> ExactSolution:
    """
    Branch and bound for the savings-maximizing feasible schedule.

    Returns the best incumbent with optimal=False when the budget runs out,
    and an infeasible solution when no schedule meets the deadline.
    """
    if node_budget < 1:
        node_budget = 1
    search = _BranchAndBound(inst, node_budget)
    search.run()
    optimal = not search.exhausted
    if not optimal:
        logger.warning("node budget %d exhausted; returning the best incumbent", node_budget)
    if search.best is None:
        logger.info("no feasible schedule after %d nodes", search.nodes)
        return _infeasible(inst, search.nodes, optimal)
    solution = _solution(inst, search.best, search.nodes, optimal)
    logger.info(
        "exact search: z=%.12f, public cost %.12f, %d nodes, optimal=%s",
        solution.savings_usd, solution.public_cost_usd, search.nodes, optimal,
    )
    return solution
