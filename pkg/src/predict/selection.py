"""
Model selection - pick the ridge penalty by k-fold cross validation

Folds are contiguous slices of a seeded shuffle, so the choice is
reproducible for a given seed.
"""

import logging
from typing import Dict, Sequence, Tuple

import numpy as np
from sklearn.model_selection import KFold

from src.errors import DomainError, RankDeficiencyError
from src.predict.ridge import fit_ridge

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = (0.0, 1e-6, 1e-3, 1e-1, 1.0, 10.0, 100.0)


def cross_validation_error(X, y, lam: float, folds: int = 5, seed: int = 0) -> float:
    """Mean squared validation error of fit_ridge(lam) over k folds."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    n = X.shape[0]
    if n < 2:
        raise DomainError("cross validation needs at least two samples")

    splitter = KFold(n_splits=min(folds, n), shuffle=True, random_state=seed)
    errors = []
    for train_idx, test_idx in splitter.split(X):
        try:
            model = fit_ridge(X[train_idx], y[train_idx], lam)
        except RankDeficiencyError:
            return float("inf")
        w = np.asarray(model.weights)
        pred = X[test_idx] @ w[:-1] + w[-1]
        errors.append(float(np.mean((pred - y[test_idx]) ** 2)))
    return float(np.mean(errors))


def select_lambda(
    X, y, grid: Sequence[float] = DEFAULT_LAMBDA_GRID, folds: int = 5, seed: int = 0
) -> Tuple[float, Dict[float, float]]:
    """
    Grid search over `grid`.

    Returns:
        (best lambda, {lambda: cv error}); ties go to the smaller lambda
    """
    if not grid:
        raise DomainError("lambda grid is empty")
    scores = {lam: cross_validation_error(X, y, lam, folds, seed) for lam in sorted(grid)}
    best = min(scores, key=lambda lam: (scores[lam], lam))
    if not np.isfinite(scores[best]):
        raise RankDeficiencyError(0, np.asarray(X).reshape(len(y), -1).shape[1] + 1)
    logger.debug("lambda grid scores %s -> %g", scores, best)
    return best, scores
