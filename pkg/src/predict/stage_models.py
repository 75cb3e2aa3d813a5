"""
Stage Models - Per-stage performance models and how they chain through the DAG

For every stage there is a private latency model (compute time plus a
constant framework overhead), a public latency model, and models that
predict the stage's output features from its input features. Output
features of the predecessors become the input features of the next stage.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import ConfigurationError, InputFormatError
from src.models.dag import AppDag
from src.models.job import Job
from src.predict.ridge import LinearModel, fit_overhead, fit_ridge_or_retry, mape, predict
from src.predict.selection import select_lambda

logger = logging.getLogger(__name__)

MIN_ESTIMATE_MS = 1.0
PRIVATE = "private"
PUBLIC = "public"


@dataclass(frozen=True)
class TraceRow:
    """One executed stage from a training trace."""

    job_id: int
    stage: int
    location: str
    features: Tuple[float, ...]
    latency_ms: float
    output_features: Tuple[float, ...] = ()
    overhead_ms: Optional[float] = None


@dataclass(frozen=True)
class StageModels:
    private_latency: LinearModel
    public_latency: LinearModel
    overhead_ms: float = 0.0
    output_models: Tuple[LinearModel, ...] = ()


@dataclass(frozen=True)
class StageModelSet:
    stages: Tuple[StageModels, ...]

    def __len__(self) -> int:
        return len(self.stages)

    def __getitem__(self, k: int) -> StageModels:
        return self.stages[k]


def stage_input_features(dag: AppDag, models: StageModelSet, input_features: Sequence[float]) -> List[List[float]]:
    """Feature vector of every stage, propagated in topological order."""
    if len(models) != dag.stage_count:
        raise ConfigurationError(f"model set covers {len(models)} stages, DAG has {dag.stage_count}")
    features: Dict[int, List[float]] = {}
    for k in dag.topological_order:
        preds = dag.predecessors(k)
        if not preds:
            features[k] = [float(v) for v in input_features]
            continue
        merged: List[float] = []
        for p in preds:
            outputs = models[p].output_models
            if not outputs:
                raise ConfigurationError(
                    f"stage {dag.names[p]} feeds {dag.names[k]} but has no output feature model"
                )
            merged.extend(predict(m, features[p]) for m in outputs)
        features[k] = merged
    return [features[k] for k in range(dag.stage_count)]


def chain_predict(dag: AppDag, models: StageModelSet, input_features: Sequence[float]) -> List[Tuple[float, float]]:
    """
    Per-stage (private, public) latency estimates for one job.

    Estimates are clamped to at least 1 ms.
    """
    features = stage_input_features(dag, models, input_features)
    estimates = []
    for k in range(dag.stage_count):
        m = models[k]
        private = predict(m.private_latency, features[k]) + m.overhead_ms
        public = predict(m.public_latency, features[k])
        estimates.append((max(MIN_ESTIMATE_MS, private), max(MIN_ESTIMATE_MS, public)))
    return estimates


def estimate_batch(dag: AppDag, models: StageModelSet, batch: Sequence[Job]) -> List[Job]:
    """
    Replace each job's latency estimates with model predictions.

    The input features are the job's features at its first source stage.
    Transfer latencies are kept as they are.
    """
    source = dag.sources[0]
    estimated = []
    for job in batch:
        if not job.features:
            raise ConfigurationError(f"job {job.id} has no features to predict from")
        pairs = chain_predict(dag, models, job.features[source])
        estimated.append(Job(
            id=job.id,
            p_private=[p for p, _ in pairs],
            p_public=[q for _, q in pairs],
            upload_ms=job.upload_ms,
            download_ms=job.download_ms,
            must_private=job.must_private,
            features=job.features,
        ))
    return estimated


def _fit(X, y, lam: float, lam_grid: Optional[Sequence[float]], folds: int, seed: int) -> LinearModel:
    if lam_grid and len(y) >= 2:
        lam, _ = select_lambda(X, y, lam_grid, folds, seed)
    return fit_ridge_or_retry(X, y, lam)


def fit_stage_models(
    dag: AppDag,
    rows: Sequence[TraceRow],
    lam: float = 1.0,
    lam_grid: Optional[Sequence[float]] = None,
    folds: int = 5,
    seed: int = 0,
) -> StageModelSet:
    """
    Fit every stage's models from a training trace.

    Private targets have the measured framework overhead removed when the
    trace records it; the overhead itself is the mean of those samples.
    """
    by_stage: Dict[int, List[TraceRow]] = defaultdict(list)
    for row in rows:
        if not 0 <= row.stage < dag.stage_count:
            raise ConfigurationError(f"trace row for job {row.job_id} has unknown stage {row.stage}")
        by_stage[row.stage].append(row)

    stages = []
    for k in range(dag.stage_count):
        stage_rows = by_stage.get(k, [])
        private_rows = [r for r in stage_rows if r.location == PRIVATE]
        public_rows = [r for r in stage_rows if r.location == PUBLIC]
        if not private_rows or not public_rows:
            raise ConfigurationError(f"stage {dag.names[k]} needs both private and public trace rows")

        overheads = [r.overhead_ms for r in private_rows if r.overhead_ms is not None]
        overhead = fit_overhead(overheads) if overheads else 0.0

        X_priv = np.array([r.features for r in private_rows], dtype=float)
        y_priv = np.array(
            [r.latency_ms - (r.overhead_ms if r.overhead_ms is not None else 0.0) for r in private_rows]
        )
        X_pub = np.array([r.features for r in public_rows], dtype=float)
        y_pub = np.array([r.latency_ms for r in public_rows])

        outputs: Tuple[LinearModel, ...] = ()
        if dag.successors(k):
            with_outputs = [r for r in stage_rows if r.output_features]
            if not with_outputs:
                raise ConfigurationError(f"stage {dag.names[k]} has successors but no output features in the trace")
            X_out = np.array([r.features for r in with_outputs], dtype=float)
            width = len(with_outputs[0].output_features)
            outputs = tuple(
                _fit(X_out, np.array([r.output_features[i] for r in with_outputs]), lam, lam_grid, folds, seed)
                for i in range(width)
            )

        stages.append(StageModels(
            private_latency=_fit(X_priv, y_priv, lam, lam_grid, folds, seed),
            public_latency=_fit(X_pub, y_pub, lam, lam_grid, folds, seed),
            overhead_ms=overhead,
            output_models=outputs,
        ))
        logger.info(
            "stage %s: %d private / %d public samples, overhead %.2f ms",
            dag.names[k], len(private_rows), len(public_rows), overhead,
        )
    return StageModelSet(tuple(stages))


def mape_report(dag: AppDag, models: StageModelSet, rows: Sequence[TraceRow]) -> List[Tuple[str, str, float]]:
    """
    MAPE per (stage, quantity) where quantity is private, public or output_<i>.
    Rows are evaluated with their recorded features.
    """
    actual: Dict[Tuple[int, str], List[float]] = defaultdict(list)
    guess: Dict[Tuple[int, str], List[float]] = defaultdict(list)
    for r in rows:
        m = models[r.stage]
        if r.location == PRIVATE:
            actual[(r.stage, PRIVATE)].append(r.latency_ms)
            guess[(r.stage, PRIVATE)].append(predict(m.private_latency, r.features) + m.overhead_ms)
        else:
            actual[(r.stage, PUBLIC)].append(r.latency_ms)
            guess[(r.stage, PUBLIC)].append(predict(m.public_latency, r.features))
        for i, om in enumerate(m.output_models):
            if i < len(r.output_features) and r.output_features[i] != 0:
                actual[(r.stage, f"output_{i}")].append(r.output_features[i])
                guess[(r.stage, f"output_{i}")].append(predict(om, r.features))
    return [
        (dag.names[stage], quantity, mape(actual[(stage, quantity)], guess[(stage, quantity)]))
        for stage, quantity in sorted(actual)
    ]


# -- model file -----------------------------------------------------------------

def _num(value: float) -> str:
    return format(value, ".17g")


def format_model_file(models: StageModelSet) -> str:
    """Flat `key = value` text, one weight per line, 17 significant digits."""
    lines = [f"stages = {len(models)}"]

    def emit(prefix: str, model: LinearModel) -> None:
        lines.append(f"{prefix}.lambda = {_num(model.lam)}")
        for i, w in enumerate(model.weights):
            lines.append(f"{prefix}.w.{i} = {_num(w)}")

    for k, m in enumerate(models.stages):
        lines.append(f"stage.{k}.overhead_ms = {_num(m.overhead_ms)}")
        emit(f"stage.{k}.private", m.private_latency)
        emit(f"stage.{k}.public", m.public_latency)
        lines.append(f"stage.{k}.outputs = {len(m.output_models)}")
        for i, om in enumerate(m.output_models):
            emit(f"stage.{k}.output.{i}", om)
    return "\n".join(lines) + "\n"


def parse_model_file(text: str, path: Optional[str] = None) -> StageModelSet:
    values: Dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InputFormatError("expected 'key = value'", path, lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            values[key] = float(value)
        except ValueError:
            raise InputFormatError(f"{key}: {value!r} is not a number", path, lineno) from None

    def model(prefix: str) -> LinearModel:
        weights = []
        while f"{prefix}.w.{len(weights)}" in values:
            weights.append(values[f"{prefix}.w.{len(weights)}"])
        if not weights:
            raise InputFormatError(f"no weights for {prefix}", path)
        return LinearModel(tuple(weights), values.get(f"{prefix}.lambda", 0.0))

    if "stages" not in values:
        raise InputFormatError("missing 'stages' entry", path)
    stages = []
    for k in range(int(values["stages"])):
        outputs = int(values.get(f"stage.{k}.outputs", 0))
        stages.append(StageModels(
            private_latency=model(f"stage.{k}.private"),
            public_latency=model(f"stage.{k}.public"),
            overhead_ms=values.get(f"stage.{k}.overhead_ms", 0.0),
            output_models=tuple(model(f"stage.{k}.output.{i}") for i in range(outputs)),
        ))
    return StageModelSet(tuple(stages))
