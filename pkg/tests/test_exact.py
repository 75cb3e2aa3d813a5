import numpy as np
import pytest

from src.agent.priority import PriorityOrder
from src.errors import DomainError, SizeGuardError
from src.exact.instance import MilpInstance
from src.exact.knapsack import knapsack_01
from src.exact.search import enumerate_exhaustive, solve_exact
from src.exact.timing import find_timing, list_schedule, schedule_makespan
from src.exact.verify import verify_schedule
from src.models.dag import AppDag
from src.models.job import LatencyTable
from src.models.schedule import PUBLIC, Placement, Schedule, ScheduleEntry
from src.sim.simulator import run_greedy
from tests.conftest import UNIT_COST, make_job


def two_job_instance(c_max):
    dag = AppDag(("work",), (), (1,), (1024.0,))
    batch = (make_job(0, [40], public=[9]), make_job(1, [50], public=[5]))
    return MilpInstance(dag, batch, c_max, UNIT_COST)


def random_instance(seed):
    """Tiny random instance: up to 4 jobs, 2 stages and 2 replicas per stage."""
    rng = np.random.default_rng(seed)
    stages = int(rng.integers(1, 3))
    jobs = int(rng.integers(1, 5))
    replicas = [int(r) for r in rng.integers(1, 3, size=stages)]
    names = [f"s{k}" for k in range(stages)]
    dag = AppDag.chain(names, replicas, [1024.0] * stages)
    batch = []
    for j in range(jobs):
        batch.append(make_job(
            j,
            [float(v) for v in rng.integers(5, 40, size=stages)],
            public=[float(v) for v in rng.integers(1, 20, size=stages)],
            upload=[float(v) for v in rng.integers(0, 6, size=stages)],
            download=[float(v) for v in rng.integers(0, 6, size=stages)],
            must_private=[0] if rng.random() < 0.15 else (),
        ))
    demand = sum(sum(job.p_private) for job in batch)
    c_max = float(rng.integers(20, max(21, int(demand) + 10)))
    return MilpInstance(dag, tuple(batch), c_max, UNIT_COST)


class TestVerifySchedule:
    def test_serial_schedule_is_feasible(self):
        inst = two_job_instance(100)
        sched = Schedule.from_entries([
            ScheduleEntry(0, 0, Placement.private(0), 0.0),
            ScheduleEntry(1, 0, Placement.private(0), 40.0),
        ])
        assert verify_schedule(inst, sched) == []
        assert schedule_makespan(inst, sched) == 90.0

    def test_overlap_on_one_replica(self):
        inst = two_job_instance(100)
        sched = Schedule.from_entries([
            ScheduleEntry(0, 0, Placement.private(0), 0.0),
            ScheduleEntry(1, 0, Placement.private(0), 0.0),
        ])
        violations = verify_schedule(inst, sched)
        assert [v.family for v in violations] == ["sequencing"]
        assert violations[0].slack == -40.0

    def test_pinned_stage_placed_public(self, chain2):
        batch = (make_job(0, [10, 10], must_private=[0]),)
        inst = MilpInstance(chain2, batch, 100, UNIT_COST)
        sched = Schedule.from_entries([
            ScheduleEntry(0, 0, PUBLIC, 0.0),
            ScheduleEntry(0, 1, PUBLIC, 5.0),
        ])
        assert "privacy" in {v.family for v in verify_schedule(inst, sched)}

    def test_deadline_and_transfers(self, chain2):
        batch = (make_job(0, [10, 10], public=[5, 5], upload=[0, 3], download=[0, 4]),)
        inst = MilpInstance(chain2, batch, 20, UNIT_COST)
        # stage 1 needs the upload after stage 0 finishes at 10
        sched = Schedule.from_entries([
            ScheduleEntry(0, 0, Placement.private(0), 0.0),
            ScheduleEntry(0, 1, PUBLIC, 11.0),
        ])
        assert [v.family for v in verify_schedule(inst, sched)] == ["precedence"]
        late = Schedule.from_entries([
            ScheduleEntry(0, 0, Placement.private(0), 0.0),
            ScheduleEntry(0, 1, PUBLIC, 13.0),
        ])
        assert [v.family for v in verify_schedule(inst, late)] == ["makespan"]

    def test_private_after_public_only_with_free_placement(self, chain2):
        batch = (make_job(0, [10, 10], public=[5, 5]),)
        sched = Schedule.from_entries([ScheduleEntry(0, 0, PUBLIC, 0.0), ScheduleEntry(0, 1, Placement.private(0), 5.0)])
        restricted = MilpInstance(chain2, batch, 100, UNIT_COST)
        free = MilpInstance(chain2, batch, 100, UNIT_COST, free_placement=True)
        assert [v.family for v in verify_schedule(restricted, sched)] == ["public_chain"]
        assert verify_schedule(free, sched) == []

    def test_missing_entry(self):
        inst = two_job_instance(100)
        sched = Schedule.from_entries([ScheduleEntry(0, 0, Placement.private(0), 0.0)])
        assert [v.family for v in verify_schedule(inst, sched)] == ["completeness"]


class TestInstance:
    def test_rejects_infinite_deadline(self):
        with pytest.raises(DomainError):
            two_job_instance(float("inf"))

    def test_big_constants(self):
        inst = two_job_instance(60)
        assert inst.q_seq > 2 * 1 * 50 + 60
        assert inst.m_ind > max(inst.dag.out_degree)

    def test_admissible_sets_are_descendant_closed(self, chain3):
        inst = MilpInstance(chain3, (make_job(0, [1, 1, 1]),), 10, UNIT_COST)
        assert sorted(map(sorted, inst.admissible_public_sets(0))) == [[], [0, 1, 2], [1, 2], [2]]


class TestExhaustive:
    def test_only_one_job_fits(self):
        solution = enumerate_exhaustive(two_job_instance(60))
        assert solution.savings_usd == 9
        assert solution.public_cost_usd == 5
        assert solution.schedule.placement(0, 0).is_private
        assert solution.schedule.placement(1, 0).is_public

    def test_everything_fits(self):
        solution = enumerate_exhaustive(two_job_instance(90))
        assert solution.savings_usd == 14
        assert solution.public_cost_usd == 0

    def test_pinned_stage_cannot_meet_deadline(self, chain2):
        inst = MilpInstance(chain2, (make_job(0, [30, 10], must_private=[0]),), 20, UNIT_COST)
        solution = enumerate_exhaustive(inst)
        assert not solution.feasible
        assert solution.schedule.is_empty()
        assert not solve_exact(inst).feasible

    def test_size_guard(self, single_stage):
        batch = tuple(make_job(j, [1]) for j in range(13))
        with pytest.raises(SizeGuardError):
            enumerate_exhaustive(MilpInstance(single_stage, batch, 100, UNIT_COST))


class TestSolveExact:
    def test_all_private_when_everything_fits(self, chain2):
        batch = tuple(make_job(j, [10, 10], public=[3, 4]) for j in range(3))
        solution = solve_exact(MilpInstance(chain2, batch, 1_000, UNIT_COST))
        assert solution.optimal
        assert solution.savings_usd == 21
        assert solution.public_cost_usd == 0

    def test_budget_of_one_node(self):
        inst = two_job_instance(60)
        solution = solve_exact(inst, node_budget=1)
        assert not solution.optimal
        assert solution.feasible
        assert verify_schedule(inst, solution.schedule) == []

    def test_savings_and_cost_add_up(self):
        for seed in range(10):
            inst = random_instance(seed)
            solution = solve_exact(inst)
            if solution.feasible:
                assert solution.savings_usd + solution.public_cost_usd == pytest.approx(inst.total_cost(), abs=1e-12)

    def test_matches_exhaustive_oracle(self):
        feasible = 0
        for seed in range(60):
            inst = random_instance(seed)
            oracle = enumerate_exhaustive(inst)
            solution = solve_exact(inst)
            assert solution.feasible == oracle.feasible, seed
            assert solution.savings_usd == oracle.savings_usd, seed
            if oracle.feasible:
                feasible += 1
                assert verify_schedule(inst, oracle.schedule) == [], seed
                assert verify_schedule(inst, solution.schedule) == [], seed
        assert feasible >= 20

    def test_free_placement_never_worse(self):
        for seed in range(20):
            inst = random_instance(seed)
            free = MilpInstance(inst.dag, inst.jobs, inst.c_max, UNIT_COST, free_placement=True)
            restricted, relaxed = solve_exact(inst), solve_exact(free)
            if restricted.feasible:
                assert relaxed.savings_usd >= restricted.savings_usd
                assert verify_schedule(free, relaxed.schedule) == []

    def test_greedy_never_beats_the_optimum(self):
        for seed in range(60):
            inst = random_instance(seed)
            truth = LatencyTable.from_jobs(inst.jobs)
            solution = solve_exact(inst)
            for order in (PriorityOrder.SPT, PriorityOrder.HCF):
                report = run_greedy(inst.dag, inst.jobs, truth, order=order, c_max=inst.c_max, cost_model=UNIT_COST)
                if report.deadline_missed:
                    continue
                assert solution.feasible, seed
                assert report.total_cost_usd >= solution.public_cost_usd - 1e-12, seed


class TestKnapsack:
    def test_dynamic_program(self):
        assert knapsack_01([40, 50], [9, 5], 60) == (9, [0])
        assert knapsack_01([40, 50], [9, 5], 90) == (14, [0, 1])
        assert knapsack_01([], [], 10) == (0.0, [])

    def test_single_stage_savings_equal_knapsack(self, single_stage):
        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            count = int(rng.integers(2, 8))
            weights = [float(w) for w in rng.integers(5, 50, size=count)]
            values = [float(v) for v in rng.integers(1, 30, size=count)]
            c_max = float(rng.integers(30, 120))
            batch = tuple(make_job(j, [weights[j]], public=[values[j]]) for j in range(count))
            inst = MilpInstance(single_stage, batch, c_max, UNIT_COST)
            best, _ = knapsack_01(weights, values, c_max)
            assert solve_exact(inst).savings_usd == best

    def test_list_schedule_follows_replica_order(self, chain2):
        batch = (make_job(0, [10, 20], public=[4, 6], upload=[2, 3]), make_job(1, [5, 5]))
        inst = MilpInstance(chain2, batch, 100, UNIT_COST)
        placements = {(0, 0): Placement.private(0), (0, 1): PUBLIC,
                      (1, 0): Placement.private(0), (1, 1): Placement.private(0)}
        starts = list_schedule(inst, placements, {(0, 0): [1, 0], (1, 0): [1]})
        assert starts == {(1, 0): 0.0, (0, 0): 5.0, (1, 1): 5.0, (0, 1): 18.0}
        assert list_schedule(inst, placements, {(0, 0): [0, 1], (1, 0): [1]})[(1, 0)] == 10.0

    def test_find_timing_serial_single_replica(self):
        inst = two_job_instance(90)
        timing = find_timing(inst, {(0, 0): False, (1, 0): False})
        assert timing is not None
        assert sorted(timing.starts.values()) == [0.0, 40.0]
        assert find_timing(two_job_instance(89), {(0, 0): False, (1, 0): False}) is None
