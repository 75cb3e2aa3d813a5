"""
Cost Model - What a public execution costs and how much private capacity exists

Private executions are free. Public executions are billed on rounded-up
execution time scaled by the memory configuration, AWS Lambda style.
"""

import math
from dataclasses import dataclass

from src.errors import DomainError
from src.models.dag import AppDag, longest_path_from
from src.models.job import Job

LAMBDA_GRANULARITY_MS = 100.0
LAMBDA_RATE_USD_PER_GB_MS = 0.00001667 / 1000
LAMBDA_REFERENCE_MEMORY_MB = 1024.0


@dataclass(frozen=True)
class CostModel:
    """
    Billing parameters. The defaults reproduce Lambda pricing.

    Attributes:
        granularity_ms: billing increment; execution time is rounded up to it
        rate_usd_per_gb_ms: price per millisecond at the reference memory
        reference_memory_mb: memory size the rate is quoted for
    """

    granularity_ms: float = LAMBDA_GRANULARITY_MS
    rate_usd_per_gb_ms: float = LAMBDA_RATE_USD_PER_GB_MS
    reference_memory_mb: float = LAMBDA_REFERENCE_MEMORY_MB

    def __post_init__(self):
        for name in ("granularity_ms", "rate_usd_per_gb_ms", "reference_memory_mb"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be strictly positive")


DEFAULT_COST_MODEL = CostModel()


def cost_of_execution(t_ms: float, memory_mb: float, cm: CostModel = DEFAULT_COST_MODEL) -> float:
    """
    Public cost in USD of one execution lasting `t_ms`.

    Args:
        t_ms: execution time in milliseconds (>= 0)
        memory_mb: memory configuration of the function
        cm: billing parameters

    Returns:
        granularity * ceil(t / granularity) * (memory / reference) * rate
    """
    if t_ms < 0:
        raise DomainError(f"execution time must be non-negative, got {t_ms}")
    if not memory_mb > 0:
        raise DomainError(f"memory must be positive, got {memory_mb}")
    billed = cm.granularity_ms * math.ceil(t_ms / cm.granularity_ms)
    # left to right so that doubling the memory doubles the result exactly
    return billed * (memory_mb / cm.reference_memory_mb) * cm.rate_usd_per_gb_ms


def stage_cost(job: Job, k: int, dag: AppDag, cm: CostModel = DEFAULT_COST_MODEL) -> float:
    """H_{k,j}: cost of running stage k of `job` publicly."""
    return cost_of_execution(job.p_public[k], dag.memory_mb[k], cm)


def job_public_cost(job: Job, dag: AppDag, cm: CostModel = DEFAULT_COST_MODEL) -> float:
    total = 0.0
    for k in range(dag.stage_count):
        total += stage_cost(job, k, dag, cm)
    return total


def job_private_runtime(job: Job) -> float:
    """C_j: total private work of a job."""
    return sum(job.p_private)


def compute_capacity(dag: AppDag, c_max: float) -> float:
    """T_max: private compute time available if every replica works until the deadline."""
    return sum(dag.replicas) * c_max


def critical_path_latency(dag: AppDag, job: Job, start: int) -> float:
    """Longest private-latency path from `start` (inclusive) to a sink."""
    return longest_path_from(dag, job.p_private, start)
