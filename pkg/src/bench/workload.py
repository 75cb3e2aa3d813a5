"""
Workload generation - synthetic batches and training traces from a template

All randomness comes from one numpy Generator seeded by the caller, drawn
in a fixed order, so a seed always produces the same batch.
"""

import logging
from typing import List, Optional, Tuple, Union

import numpy as np

from src.errors import DomainError
from src.knowledge.app_templates import WorkloadTemplate, get_template
from src.models.dag import AppDag
from src.models.job import Job, LatencyTable, StageLatency
from src.predict.stage_models import PRIVATE, PUBLIC, TraceRow

logger = logging.getLogger(__name__)

TemplateRef = Union[str, WorkloadTemplate]


def _resolve(template: TemplateRef) -> WorkloadTemplate:
    return get_template(template) if isinstance(template, str) else template


def true_latencies(template: WorkloadTemplate, dag: AppDag, size: float) -> Tuple[List[StageLatency], List[Tuple[float, ...]]]:
    """Per-stage latencies of a job of input `size`, plus its stage features."""
    features = template.stage_features(dag, size)
    rows = []
    for k in range(dag.stage_count):
        stage = template.stages[k]
        rows.append(StageLatency(
            private_ms=stage.private_ms(features[k]) + template.private_overhead_ms,
            public_ms=stage.public_ms(features[k]) + template.public_startup_ms,
            upload_ms=template.upload_ms(features[k]),
            download_ms=template.download_ms(stage, features[k]),
        ))
    for k, row in enumerate(rows):
        if not (row.private_ms > 0 and row.public_ms > 0) or row.upload_ms < 0 or row.download_ms < 0:
            raise DomainError(f"template {template.name} yields a non-positive latency at stage {k} for size {size}")
    return rows, features


def generate_workload(
    template: TemplateRef,
    n_jobs: int,
    seed: int = 0,
    error_factor: float = 1.0,
    error_sigma: float = 0.0,
) -> Tuple[AppDag, List[Job], LatencyTable, LatencyTable]:
    """
    Sample a batch.

    Estimates are the true stage latencies times error_factor times a
    log-normal factor per (job, stage); transfers are not perturbed.

    Returns:
        (dag, batch carrying the estimates, truth, estimates)
    """
    if n_jobs < 1:
        raise DomainError(f"n_jobs must be at least 1, got {n_jobs}")
    if not error_factor > 0 or error_sigma < 0:
        raise DomainError("error_factor must be positive and error_sigma non-negative")
    tmpl = _resolve(template)
    dag = tmpl.build_dag()
    rng = np.random.default_rng(seed)

    low, high = tmpl.feature_range
    sizes = rng.uniform(low, high, size=n_jobs)
    if error_sigma > 0:
        noise = rng.lognormal(0.0, error_sigma, size=(n_jobs, dag.stage_count, 2))
    else:
        noise = np.ones((n_jobs, dag.stage_count, 2))

    truth_rows = {}
    estimate_rows = {}
    batch = []
    for j in range(n_jobs):
        rows, features = true_latencies(tmpl, dag, float(sizes[j]))
        estimated = []
        for k, row in enumerate(rows):
            truth_rows[(j, k)] = row
            guess = StageLatency(
                private_ms=row.private_ms * error_factor * float(noise[j, k, 0]),
                public_ms=row.public_ms * error_factor * float(noise[j, k, 1]),
                upload_ms=row.upload_ms,
                download_ms=row.download_ms,
            )
            estimate_rows[(j, k)] = guess
            estimated.append(guess)
        batch.append(Job(
            id=j,
            p_private=[r.private_ms for r in estimated],
            p_public=[r.public_ms for r in estimated],
            upload_ms=[r.upload_ms for r in estimated],
            download_ms=[r.download_ms for r in estimated],
            features=features,
        ))

    logger.info("generated %d %s jobs (seed %d)", n_jobs, tmpl.name, seed)
    return dag, batch, LatencyTable(truth_rows), LatencyTable(estimate_rows)


def generate_training_trace(
    template: TemplateRef,
    n_jobs: int,
    seed: int = 0,
    noise: Optional[float] = None,
) -> List[TraceRow]:
    """
    Every job executed once privately and once publicly, stage by stage.

    Private rows record the framework overhead separately. Measurements get
    a relative gaussian error (template default when `noise` is None).
    """
    if n_jobs < 1:
        raise DomainError(f"n_jobs must be at least 1, got {n_jobs}")
    tmpl = _resolve(template)
    dag = tmpl.build_dag()
    sigma = tmpl.noise if noise is None else noise
    rng = np.random.default_rng(seed)
    low, high = tmpl.feature_range
    sizes = rng.uniform(low, high, size=n_jobs)
    shape = (n_jobs, dag.stage_count, 2)
    jitter = rng.normal(1.0, sigma, size=shape) if sigma > 0 else np.ones(shape)
    jitter = np.clip(jitter, 0.5, 1.5)

    rows: List[TraceRow] = []
    for j in range(n_jobs):
        features = tmpl.stage_features(dag, float(sizes[j]))
        for k in range(dag.stage_count):
            stage = tmpl.stages[k]
            outputs = (stage.output_feature(features[k]),) if dag.successors(k) else ()
            compute = stage.private_ms(features[k]) * float(jitter[j, k, 0])
            rows.append(TraceRow(
                job_id=j,
                stage=k,
                location=PRIVATE,
                features=features[k],
                latency_ms=compute + tmpl.private_overhead_ms,
                output_features=outputs,
                overhead_ms=tmpl.private_overhead_ms,
            ))
            rows.append(TraceRow(
                job_id=j,
                stage=k,
                location=PUBLIC,
                features=features[k],
                latency_ms=(stage.public_ms(features[k]) + tmpl.public_startup_ms) * float(jitter[j, k, 1]),
                output_features=outputs,
            ))
    return rows
