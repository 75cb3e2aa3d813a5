from src.bench.sweep import (
    POLICIES,
    SWEEP_FIELDS,
    ComparisonRecord,
    SweepRow,
    SweepSpec,
    compare_with_optimal,
    run_policy,
    sweep,
)
from src.bench.workload import generate_training_trace, generate_workload
