import pytest

from src.bench.sweep import POLICIES, SweepSpec, compare_with_optimal, run_policy, sweep
from src.bench.workload import generate_training_trace, generate_workload
from src.errors import ConfigurationError, DomainError
from src.models.job import LatencyTable
from src.sim.simulator import run_all_private
from tests.conftest import UNIT_COST, make_job


class TestWorkload:
    def test_same_seed_same_batch(self):
        first = generate_workload("video", 8, seed=11, error_sigma=0.2)
        second = generate_workload("video", 8, seed=11, error_sigma=0.2)
        assert first == second
        assert generate_workload("video", 8, seed=12, error_sigma=0.2)[2] != first[2]

    def test_exact_estimates(self):
        _, batch, truth, estimates = generate_workload("matrix", 5, seed=1)
        assert estimates == truth
        assert LatencyTable.from_jobs(batch) == truth

    def test_error_factor_scales_compute_only(self):
        _, _, truth, estimates = generate_workload("image", 3, seed=2, error_factor=2.0)
        row, guess = truth.get(0, 1), estimates.get(0, 1)
        assert guess.private_ms == pytest.approx(2 * row.private_ms)
        assert guess.public_ms == pytest.approx(2 * row.public_ms)
        assert guess.upload_ms == row.upload_ms

    def test_video_shape(self):
        dag, batch, _, _ = generate_workload("video", 4, seed=0)
        assert dag.stage_count == 4
        assert dag.edges == ((0, 1), (0, 2), (1, 3), (2, 3))
        assert [job.id for job in batch] == [0, 1, 2, 3]
        assert all(len(job.features) == 4 for job in batch)

    def test_rejects_bad_arguments(self):
        with pytest.raises(DomainError):
            generate_workload("matrix", 0)
        with pytest.raises(DomainError):
            generate_workload("matrix", 3, error_factor=0.0)
        with pytest.raises(ConfigurationError):
            generate_workload("spreadsheet", 3)

    def test_training_trace_rows(self):
        rows = generate_training_trace("image", 6, seed=3)
        assert len(rows) == 6 * 3 * 2
        assert generate_training_trace("image", 6, seed=3) == rows


class TestSweepSpec:
    def test_normalizes(self):
        spec = SweepSpec((1000, 2000), ("SPT", "all-public"))
        assert spec.c_max_values == (1000.0, 2000.0)
        assert spec.policies == ("spt", "all-public")

    @pytest.mark.parametrize("kwargs", [
        {"c_max_values": ()},
        {"c_max_values": (0.0,)},
        {"c_max_values": (100.0,), "policies": ()},
        {"c_max_values": (100.0,), "policies": ("lifo",)},
        {"c_max_values": (100.0,), "repetitions": 0},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigurationError):
            SweepSpec(**kwargs)


class TestSweep:
    @pytest.fixture
    def video(self):
        return generate_workload("video", 12, seed=4)

    def test_row_order(self, video):
        dag, batch, truth, estimates = video
        spec = SweepSpec((30_000, 10_000), ("hcf", "spt"), repetitions=2)
        rows = sweep(dag, batch, truth, estimates, spec)
        assert [(r.c_max_ms, r.policy, r.repetition) for r in rows] == [
            (10_000, "hcf", 0), (10_000, "hcf", 1), (10_000, "spt", 0), (10_000, "spt", 1),
            (30_000, "hcf", 0), (30_000, "hcf", 1), (30_000, "spt", 0), (30_000, "spt", 1),
        ]
        assert rows[0].to_csv_row() == rows[1].to_csv_row() | {"repetition": "0"}

    def test_baselines(self, video):
        dag, batch, truth, estimates = video
        rows = sweep(dag, batch, truth, estimates, SweepSpec((5_000, 50_000), ("all-public", "all-private")))
        public = [r for r in rows if r.policy == "all-public"]
        private = [r for r in rows if r.policy == "all-private"]
        assert len({r.cost_usd for r in public}) == 1
        assert all(r.cost_usd == 0.0 for r in private)
        assert all(r.offloaded_fraction == 1.0 for r in public)
        assert len({r.makespan_ms for r in private}) == 1

    def test_trend_over_deadlines(self):
        dag, batch, truth, estimates = generate_workload("video", 50, seed=7)
        horizon = run_all_private(dag, batch, truth).makespan_ms
        fractions = (0.2, 0.35, 0.5, 0.65, 0.8, 1.0)
        spec = SweepSpec(tuple(horizon * f for f in fractions), POLICIES, seed=7)
        rows = sweep(dag, batch, truth, estimates, spec)
        by_policy = {p: [r for r in rows if r.policy == p] for p in POLICIES}

        def inversions(values):
            return sum(1 for a, b in zip(values, values[1:]) if b > a)

        for policy in ("spt", "hcf"):
            counts = [r.offloaded_count for r in by_policy[policy]]
            costs = [r.cost_usd for r in by_policy[policy]]
            assert len(costs) == len(fractions)
            assert inversions(counts) <= 1, policy
            assert inversions(costs) <= 1, policy
            assert costs[0] > costs[-1], policy
        assert len({r.cost_usd for r in by_policy["all-public"]}) == 1
        assert all(r.cost_usd == 0.0 for r in by_policy["all-private"])
        assert {r.seed for r in rows} == {7}
        assert rows[0].to_csv_row()["seed"] == "7"

    def test_unknown_policy(self, video):
        dag, batch, truth, estimates = video
        with pytest.raises(ConfigurationError):
            run_policy(dag, batch, truth, estimates, "lifo", 1_000)


class TestCompareWithOptimal:
    def test_single_stage_batch(self, single_stage):
        batch = [make_job(j, [p]) for j, p in enumerate([40.0, 50.0, 30.0, 20.0])]
        record = compare_with_optimal(single_stage, batch, LatencyTable.from_jobs(batch), 80.0, UNIT_COST)

        assert record.exact.optimal
        assert record.exact.savings_usd == 40.0
        assert record.exact.public_cost_usd == 30.0
        assert record.knapsack_savings == 40.0
        # SPT keeps the two shortest jobs and pays for the two longest
        assert record.methods["spt"].cost_usd == 45.0
        assert record.cost_ratio["spt"] == 1.5
        assert record.methods["exact"].cost_usd == 30.0
        assert not record.methods["exact"].deadline_missed

        public = record.methods["all-public"].cost_usd
        assert public == 70.0
        assert all(result.cost_usd <= public for result in record.methods.values())
        assert record.speedup["all-private"] == 1.0
        assert record.cost_fraction["all-public"] == 1.0

    def test_greedy_never_cheaper_than_optimum(self):
        for seed in range(5):
            dag, batch, truth, _ = generate_workload("image", 3, seed=seed)
            horizon = run_all_private(dag, batch, truth).makespan_ms
            record = compare_with_optimal(dag, batch, truth, 0.6 * horizon)
            for policy, ratio in record.cost_ratio.items():
                if not record.methods[policy].deadline_missed:
                    assert ratio >= 1.0 - 1e-9

    def test_summary_lines(self, single_stage):
        batch = [make_job(0, [10.0])]
        record = compare_with_optimal(single_stage, batch, LatencyTable.from_jobs(batch), 100.0)
        lines = record.summary_lines()
        assert lines[0] == "c_max_ms = 100.000"
        assert "exact.feasible = true" in lines
        assert lines[-1] == f"knapsack.savings_usd = {record.exact.savings_usd:.12f}"
