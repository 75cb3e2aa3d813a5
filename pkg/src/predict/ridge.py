"""
Ridge regression via the normal equations

The intercept is the last weight and is never penalized.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from src.errors import DomainError, RankDeficiencyError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinearModel:
    """
    Attributes:
        weights: one per feature, then the intercept
        lam: ridge penalty the model was fit with
    """

    weights: Tuple[float, ...]
    lam: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) < 1:
            raise DomainError("a linear model needs at least an intercept")
        if not all(np.isfinite(self.weights)):
            raise DomainError("model weights must be finite")

    @property
    def dimension(self) -> int:
        return len(self.weights) - 1

    @property
    def slope(self) -> Tuple[float, ...]:
        return self.weights[:-1]

    @property
    def intercept(self) -> float:
        return self.weights[-1]

    @staticmethod
    def constant(value: float, dimension: int = 0) -> "LinearModel":
        return LinearModel((0.0,) * dimension + (float(value),))


def fit_ridge(X, y, lam: float = 0.0) -> LinearModel:
    """
    Solve argmin ||A w - y||^2 + lam ||w_slope||^2 with A = [X, 1].

    Args:
        X: n x d features
        y: n targets
        lam: ridge penalty (>= 0)

    Returns:
        LinearModel with d + 1 weights
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    n, d = X.shape
    if n < 1 or d < 1:
        raise DomainError(f"need at least one sample and one feature, got {n}x{d}")
    if y.shape[0] != n:
        raise DomainError(f"{n} feature rows but {y.shape[0]} targets")
    if lam < 0:
        raise DomainError(f"ridge penalty must be non-negative, got {lam}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DomainError("training data contains non-finite values")

    A = np.c_[X, np.ones(n)]
    penalty = lam * np.eye(d + 1)
    penalty[d, d] = 0.0
    gram = A.T @ A + penalty

    rank = np.linalg.matrix_rank(gram)
    if rank < d + 1:
        raise RankDeficiencyError(int(rank), d + 1)

    w = np.linalg.solve(gram, A.T @ y)
    return LinearModel(tuple(w.tolist()), lam)


def predict(m: LinearModel, features: Sequence[float]) -> float:
    """dot(slope, features) + intercept, unclamped."""
    if len(features) != m.dimension:
        raise DomainError(f"model expects {m.dimension} features, got {len(features)}")
    return float(np.dot(m.slope, features)) + m.intercept if m.dimension else m.intercept


def fit_overhead(samples: Sequence[float]) -> float:
    """Framework overhead is modeled as the mean of its samples."""
    if len(samples) == 0:
        raise DomainError("overhead needs at least one sample")
    return float(np.mean(np.asarray(samples, dtype=float)))


def mape(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Mean absolute percentage error, in percent."""
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.size == 0:
        raise DomainError("mape needs two equally long, non-empty vectors")
    if np.any(a == 0):
        raise DomainError("mape is undefined when an actual value is zero")
    return float(100.0 / a.size * np.sum(np.abs(a - p) / np.abs(a)))


def fit_ridge_or_retry(X, y, lam: float, fallback_lam: float = 1e-6) -> LinearModel:
    """fit_ridge, retried once with a small penalty when the system is singular."""
    try:
        return fit_ridge(X, y, lam)
    except RankDeficiencyError as e:
        if lam > 0:
            raise
        logger.warning("%s; refitting with lambda=%g", e, fallback_lam)
        return fit_ridge(X, y, fallback_lam)
