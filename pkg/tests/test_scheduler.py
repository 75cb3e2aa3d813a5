import numpy as np
import pytest

from src.agent.priority import PriorityOrder, StageQueue, priority_keys, priority_sequence
from src.agent.scheduler import ACD, ENQUEUE, INITIAL, PUBLIC_TRIGGER, GreedyScheduler
from src.errors import ConfigurationError, ConsistencyError
from src.models.cost import stage_cost
from src.models.dag import AppDag
from src.models.schedule import PUBLIC, Placement
from tests.conftest import UNIT_COST, make_job


class TestPriority:
    def test_spt_head_is_shortest(self, single_stage):
        batch = [make_job(0, [30]), make_job(1, [10]), make_job(2, [20])]
        keys = priority_keys(batch, single_stage, PriorityOrder.SPT)
        assert priority_sequence(keys, PriorityOrder.SPT) == [1, 2, 0]

    def test_hcf_head_is_most_expensive(self, single_stage):
        batch = [make_job(0, [10], public=[1]), make_job(1, [10], public=[9]), make_job(2, [10], public=[5])]
        keys = priority_keys(batch, single_stage, PriorityOrder.HCF, UNIT_COST)
        assert priority_sequence(keys, PriorityOrder.HCF) == [1, 2, 0]

    def test_ties_go_to_smaller_id(self, single_stage):
        batch = [make_job(2, [10]), make_job(0, [10]), make_job(1, [10])]
        for order in (PriorityOrder.SPT, PriorityOrder.HCF):
            keys = priority_keys(batch, single_stage, order)
            assert priority_sequence(keys, order) == [0, 1, 2]

    def test_parse(self):
        assert PriorityOrder.parse(" HCF ") is PriorityOrder.HCF
        with pytest.raises(ConfigurationError):
            PriorityOrder.parse("lifo")

    def test_queue_stays_sorted(self):
        keys = {0: 5.0, 1: 1.0, 2: 3.0}
        queue = StageQueue(0, PriorityOrder.SPT, keys)
        for job in (0, 1, 2):
            queue.insert(job)
        assert queue.jobs() == [1, 2, 0]
        queue.remove(2)
        assert queue.jobs() == [1, 0]
        assert queue.pop_head() == 1
        with pytest.raises(ConsistencyError):
            queue.insert(0)


class TestInitialPartition:
    def test_spt_prefix(self, single_stage):
        batch = [make_job(0, [50]), make_job(1, [60]), make_job(2, [70])]
        scheduler = GreedyScheduler(single_stage, batch, 120)
        retained, offloaded = scheduler.initial_partition()
        assert retained == [0, 1]
        assert offloaded == [2]
        assert scheduler.job_location[(2, 0)] == PUBLIC
        assert scheduler.queues[0].jobs() == [0, 1]
        assert scheduler.offload_log[0].reason == INITIAL

    def test_capacity_covers_everything(self, single_stage):
        batch = [make_job(0, [50]), make_job(1, [60])]
        _, offloaded = GreedyScheduler(single_stage, batch, 1000).initial_partition()
        assert offloaded == []

    def test_hcf_offloads_cheapest(self, single_stage):
        batch = [make_job(0, [40], public=[9]), make_job(1, [40], public=[5]), make_job(2, [40], public=[1])]
        scheduler = GreedyScheduler(single_stage, batch, 80, PriorityOrder.HCF, UNIT_COST)
        retained, offloaded = scheduler.initial_partition()
        assert retained == [0, 1]
        assert offloaded == [2]

    def test_prefix_is_not_backfilled(self, single_stage):
        batch = [make_job(0, [50]), make_job(1, [60]), make_job(2, [5])]
        scheduler = GreedyScheduler(single_stage, batch, 100, PriorityOrder.FIFO)
        retained, offloaded = scheduler.initial_partition()
        assert retained == [0]
        assert offloaded == [1, 2]

    def test_pinned_jobs_always_retained(self, single_stage):
        batch = [make_job(0, [50]), make_job(1, [90], must_private=[0])]
        scheduler = GreedyScheduler(single_stage, batch, 100)
        retained, offloaded = scheduler.initial_partition()
        assert retained == [1]
        assert offloaded == [0]
        assert not scheduler.capacity_warning

    def test_pinned_overflow_warns(self, single_stage):
        batch = [make_job(0, [150], must_private=[0])]
        scheduler = GreedyScheduler(single_stage, batch, 100)
        retained, _ = scheduler.initial_partition()
        assert retained == [0]
        assert scheduler.capacity_warning

    def test_runs_once(self, single_stage):
        scheduler = GreedyScheduler(single_stage, [make_job(0, [5])], 100)
        scheduler.initial_partition()
        with pytest.raises(ConsistencyError):
            scheduler.initial_partition()

    def test_hcf_keeps_more_expensive_work_private(self, single_stage):
        for seed in range(30):
            rng = np.random.default_rng(seed)
            costs = rng.integers(1, 100, size=8)
            batch = [make_job(j, [40], public=[float(c)]) for j, c in enumerate(costs)]
            capacity = float(rng.integers(1, 8) * 40)

            def retained_cost(order):
                scheduler = GreedyScheduler(single_stage, batch, capacity, order, UNIT_COST)
                retained, _ = scheduler.initial_partition()
                return sum(stage_cost(scheduler.jobs[j], 0, single_stage, UNIT_COST) for j in retained)

            assert retained_cost(PriorityOrder.HCF) >= retained_cost(PriorityOrder.SPT)


class TestAcd:
    def test_empty_queue_ahead(self, single_stage):
        scheduler = GreedyScheduler(single_stage, [make_job(0, [10_000])], 60_000)
        scheduler.initial_partition()
        assert scheduler.acd(0, 0, 0.0) == 50_000

    def test_queue_delay_split_over_replicas(self):
        dag = AppDag(("work",), (), (2,), (1024.0,))
        batch = [make_job(j, [10_000]) for j in range(3)]
        scheduler = GreedyScheduler(dag, batch, 60_000)
        scheduler.initial_partition()
        assert scheduler.acd(0, 2, 0.0) == 40_000

    def test_negative_on_chain(self, chain2):
        scheduler = GreedyScheduler(chain2, [make_job(0, [30_000, 45_000])], 60_000)
        scheduler.initial_partition()
        assert scheduler.acd(0, 0, 20_000.0) == -35_000

    def test_job_must_be_queued(self, single_stage):
        scheduler = GreedyScheduler(single_stage, [make_job(0, [10])], 100)
        with pytest.raises(ConsistencyError):
            scheduler.acd(0, 0, 0.0)


class TestOnQueueChange:
    def test_tail_job_offloaded(self, single_stage):
        scheduler = GreedyScheduler(single_stage, [make_job(0, [10_000]), make_job(1, [10_000])], 15_000)
        scheduler.queues[0].insert(0)
        scheduler.queues[0].insert(1)
        assert scheduler.on_queue_change(0, 0.0) == [1]
        assert scheduler.queues[0].jobs() == [0]
        assert scheduler.job_location[(1, 0)] == PUBLIC
        assert scheduler.offload_log[-1].reason == ACD

    def test_removed_jobs_stop_counting_as_delay(self, single_stage):
        batch = [make_job(0, [20_000]), make_job(1, [12_000]), make_job(2, [1_000])]
        scheduler = GreedyScheduler(single_stage, batch, 15_000, PriorityOrder.FIFO)
        for job in (0, 1, 2):
            scheduler.queues[0].insert(job)
        # job 0 alone misses; without it job 2 waits only for job 1
        assert scheduler.on_queue_change(0, 0.0) == [0]
        assert scheduler.queues[0].jobs() == [1, 2]

    def test_empty_queue(self, single_stage):
        scheduler = GreedyScheduler(single_stage, [make_job(0, [10])], 100)
        assert scheduler.on_queue_change(0, 0.0) == []

    def test_slack_everywhere(self, single_stage):
        scheduler = GreedyScheduler(single_stage, [make_job(0, [10]), make_job(1, [10])], 1_000_000)
        scheduler.initial_partition()
        assert scheduler.on_queue_change(0, 0.0) == []
        assert scheduler.queues[0].jobs() == [0, 1]

    def test_pinned_job_skipped(self, single_stage):
        scheduler = GreedyScheduler(single_stage, [make_job(0, [10_000], must_private=[0])], 5_000)
        scheduler.queues[0].insert(0)
        assert scheduler.on_queue_change(0, 0.0) == []
        assert 0 in scheduler.queues[0]


class TestDispatch:
    def test_head_dispatched(self, single_stage):
        batch = [make_job(0, [20]), make_job(1, [30]), make_job(2, [5])]
        scheduler = GreedyScheduler(single_stage, batch, 10_000)
        scheduler.initial_partition()
        assert scheduler.on_replica_available(0, 0, 0.0) == 2
        assert scheduler.queues[0].jobs() == [0, 1]
        assert scheduler.job_location[(2, 0)] == Placement.private(0)
        assert scheduler.replica_busy_until[(0, 0)] == 5

    def test_empty_queue_returns_none(self):
        dag = AppDag(("work",), (), (2,), (1024.0,))
        scheduler = GreedyScheduler(dag, [make_job(0, [10])], 100)
        scheduler.initial_partition()
        assert scheduler.on_replica_available(0, 0, 0.0) == 0
        assert scheduler.on_replica_available(0, 1, 0.0) is None

    def test_busy_replica_rejected(self, single_stage):
        scheduler = GreedyScheduler(single_stage, [make_job(0, [10]), make_job(1, [10])], 100)
        scheduler.initial_partition()
        scheduler.on_replica_available(0, 0, 0.0)
        with pytest.raises(ConsistencyError):
            scheduler.on_replica_available(0, 0, 0.0)


class TestStageComplete:
    def test_chain_enqueues_next_stage(self, chain2):
        scheduler = GreedyScheduler(chain2, [make_job(0, [10, 10])], 1_000)
        scheduler.initial_partition()
        scheduler.on_replica_available(0, 0, 0.0)
        assert scheduler.on_stage_complete(0, 0, 10.0) == [(1, ENQUEUE)]
        assert scheduler.queues[1].jobs() == [0]
        assert scheduler.replica_busy[(0, 0)] is None

    def test_diamond_join_waits_for_both_branches(self, diamond):
        scheduler = GreedyScheduler(diamond, [make_job(0, [10, 10, 10, 10])], 1_000)
        scheduler.initial_partition()
        scheduler.on_replica_available(0, 0, 0.0)
        assert scheduler.on_stage_complete(0, 0, 10.0) == [(1, ENQUEUE), (2, ENQUEUE)]
        scheduler.on_replica_available(1, 0, 10.0)
        scheduler.on_replica_available(2, 0, 10.0)
        assert scheduler.on_stage_complete(0, 1, 20.0) == []
        assert scheduler.on_stage_complete(0, 2, 20.0) == [(3, ENQUEUE)]

    def test_public_chain_skips_queues(self, chain3):
        scheduler = GreedyScheduler(chain3, [make_job(0, [10_000, 10_000, 10_000])], 100_000)
        scheduler.initial_partition()
        scheduler.on_replica_available(0, 0, 0.0)
        # late completion: the job cannot finish privately any more
        assert scheduler.on_stage_complete(0, 0, 95_000.0) == [(1, ENQUEUE)]
        assert scheduler.job_location[(0, 1)] == PUBLIC
        assert scheduler.job_location[(0, 2)] == PUBLIC
        assert len(scheduler.queues[1]) == 0
        assert sorted(scheduler.drain_public()) == [(0, 1), (0, 2)]

        scheduler.note_public_start(0, 1)
        assert scheduler.on_stage_complete(0, 1, 99_000.0) == [(2, PUBLIC_TRIGGER)]

    def test_never_dispatched(self, chain2):
        scheduler = GreedyScheduler(chain2, [make_job(0, [10, 10])], 1_000)
        with pytest.raises(ConsistencyError):
            scheduler.on_stage_complete(0, 0, 0.0)

    def test_completed_twice(self, single_stage):
        scheduler = GreedyScheduler(single_stage, [make_job(0, [10])], 1_000)
        scheduler.initial_partition()
        scheduler.on_replica_available(0, 0, 0.0)
        scheduler.on_stage_complete(0, 0, 10.0)
        with pytest.raises(ConsistencyError):
            scheduler.on_stage_complete(0, 0, 10.0)
