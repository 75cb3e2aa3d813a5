"""
Application Templates - Generic serverless pipelines

Defines the shape and latency behavior of the workloads the benchmark
generates: stages, replicas, memory and how long each stage takes as a
function of its input size. Every latency is linear in the stage's input
features, so the prediction pipeline can learn them exactly.
"""

from typing import List, Sequence, Tuple

from src.errors import ConfigurationError
from src.models.dag import AppDag

CALIBRATED_ERROR_SIGMA = 0.06


class StageTemplate:
    """One function of a pipeline (e.g., Matrix Multiply, Detect Objects)"""

    def __init__(self, name, replicas, memory_mb, private, public, output=(1.0, 0.0)):
        self.name = name
        self.replicas = replicas
        self.memory_mb = memory_mb
        self.private = private  # (slope, intercept) over the sum of input features, ms
        self.public = public  # same, without the startup term
        self.output = output  # (slope, intercept) of the output feature

    def private_ms(self, features: Sequence[float]) -> float:
        return self.private[0] * sum(features) + self.private[1]

    def public_ms(self, features: Sequence[float]) -> float:
        return self.public[0] * sum(features) + self.public[1]

    def output_feature(self, features: Sequence[float]) -> float:
        return self.output[0] * sum(features) + self.output[1]


class WorkloadTemplate:
    """A whole application: stages, edges and the per-job input size range"""

    def __init__(self, name, description, stages, edges, feature_range, upload, download,
                 public_startup_ms=0.0, private_overhead_ms=0.0, noise=0.0, dag=None):
        self.name = name
        self.description = description
        self.stages = stages
        self.edges = edges
        self.feature_range = feature_range  # uniform range of the job's input size
        self.upload = upload  # (slope, intercept) over the stage's input features
        self.download = download  # (slope, intercept) over the stage's output feature
        self.public_startup_ms = public_startup_ms
        self.private_overhead_ms = private_overhead_ms
        self.noise = noise  # relative standard deviation of training measurements
        self.dag = dag  # fixed DAG for custom templates

    def build_dag(self) -> AppDag:
        if self.dag is not None:
            return self.dag
        return AppDag(
            names=tuple(s.name for s in self.stages),
            edges=tuple(self.edges),
            replicas=tuple(s.replicas for s in self.stages),
            memory_mb=tuple(s.memory_mb for s in self.stages),
        )

    def stage_features(self, dag: AppDag, size: float) -> List[Tuple[float, ...]]:
        """Input features of every stage for a job of input `size`."""
        features = {}
        for k in dag.topological_order:
            preds = dag.predecessors(k)
            if not preds:
                features[k] = (float(size),)
            else:
                features[k] = tuple(self.stages[p].output_feature(features[p]) for p in preds)
        return [features[k] for k in range(dag.stage_count)]

    def upload_ms(self, features: Sequence[float]) -> float:
        return self.upload[0] * sum(features) + self.upload[1]

    def download_ms(self, stage: StageTemplate, features: Sequence[float]) -> float:
        return self.download[0] * stage.output_feature(features) + self.download[1]


# ============================================================================
# BUILT-IN APPLICATIONS
# ============================================================================

TEMPLATES = {
    "matrix": WorkloadTemplate(
        name="MatrixChain",
        description="Matrix multiply then LU decomposition; input is the matrix order",
        stages=[
            StageTemplate("multiply", 2, 2048, private=(12.0, 150.0), public=(8.0, 100.0)),
            StageTemplate("decompose", 2, 2048, private=(20.0, 200.0), public=(14.0, 150.0)),
        ],
        edges=[(0, 1)],
        feature_range=(350.0, 500.0),
        upload=(0.5, 80.0),
        download=(0.3, 60.0),
        public_startup_ms=150.0,
        private_overhead_ms=40.0,
        noise=0.03,
    ),
    "video": WorkloadTemplate(
        name="VideoDag",
        description="Extract frames, then detect objects and recognize images, then merge; input is seconds of video",
        stages=[
            StageTemplate("extract_frames", 2, 1024, private=(200.0, 300.0), public=(150.0, 300.0)),
            StageTemplate("detect_objects", 2, 3008, private=(500.0, 500.0), public=(380.0, 450.0)),
            StageTemplate("recognize_images", 2, 1024, private=(120.0, 100.0), public=(100.0, 120.0)),
            StageTemplate("merge", 2, 512, private=(10.0, 100.0), public=(8.0, 120.0)),
        ],
        edges=[(0, 1), (0, 2), (1, 3), (2, 3)],
        feature_range=(2.0, 10.0),
        upload=(40.0, 50.0),
        download=(5.0, 30.0),
        public_startup_ms=200.0,
        private_overhead_ms=60.0,
        noise=0.05,
    ),
    "image": WorkloadTemplate(
        name="ImageChain",
        description="Rotate, resize and compress an image; input is the file size in KB",
        stages=[
            StageTemplate("rotate", 1, 2048, private=(0.10, 60.0), public=(0.08, 50.0)),
            StageTemplate("resize", 1, 2048, private=(0.08, 50.0), public=(0.06, 40.0), output=(0.5, 0.0)),
            StageTemplate("compress", 1, 2048, private=(0.12, 40.0), public=(0.10, 35.0), output=(0.4, 0.0)),
        ],
        edges=[(0, 1), (1, 2)],
        feature_range=(100.0, 1000.0),
        upload=(0.2, 40.0),
        download=(0.05, 20.0),
        public_startup_ms=30.0,
        private_overhead_ms=10.0,
        noise=0.04,
    ),
}


def get_template(template_id):
    """Get a template by ID"""
    template = TEMPLATES.get(template_id)
    if template is None:
        raise ConfigurationError(f"unknown template {template_id!r} (known: {', '.join(sorted(TEMPLATES))})")
    return template


def custom_template(dag: AppDag, feature_range=(1.0, 10.0)) -> WorkloadTemplate:
    """Generic linear latencies for a user-supplied DAG"""
    stages = [
        StageTemplate(dag.names[k], dag.replicas[k], dag.memory_mb[k], private=(100.0, 200.0), public=(80.0, 250.0))
        for k in range(dag.stage_count)
    ]
    return WorkloadTemplate(
        name="Custom",
        description="User-supplied DAG with generic latencies",
        stages=stages,
        edges=list(dag.edges),
        feature_range=feature_range,
        upload=(10.0, 50.0),
        download=(5.0, 30.0),
        public_startup_ms=100.0,
        dag=dag,
    )
