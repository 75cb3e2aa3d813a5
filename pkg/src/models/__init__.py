from src.models.cost import (
    CostModel,
    DEFAULT_COST_MODEL,
    compute_capacity,
    cost_of_execution,
    critical_path_latency,
    job_private_runtime,
    job_public_cost,
    stage_cost,
)
from src.models.dag import AppDag, check_dag_parts, longest_path, longest_path_from, validate_dag
from src.models.job import Job, LatencyTable, StageLatency, TruthTable
from src.models.schedule import PUBLIC, Placement, Schedule, ScheduleEntry
