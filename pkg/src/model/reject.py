from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.model_selection import KFold, StratifiedKFold

from .errors import ModelError


logger = logging.getLogger("model")


def _neighbor_labels(train_X: np.ndarray, train_y: np.ndarray, X: np.ndarray, k: int) -> np.ndarray:
    d = cdist(np.atleast_2d(X), train_X)
    order = np.argsort(d, axis=1, kind="stable")[:, :k]
    return train_y[order]


def _agreement(neigh: np.ndarray, n_classes: int) -> Tuple[np.ndarray, np.ndarray]:
    """(majority class, majority fraction) per row; ties go to the lowest class id."""
    counts = np.stack([(neigh == c).sum(axis=1) for c in range(n_classes)], axis=1)
    return np.argmax(counts, axis=1), counts.max(axis=1) / neigh.shape[1]


@dataclass(frozen=True)
class RejectScore:
    """Conformal-style reject score over a k-NN backbone.

    r(x) = 1 - (majority-class neighbours / k); 0 means every neighbour agrees.
    """

    k: int
    threshold: float
    points: np.ndarray
    labels: np.ndarray
    n_classes: int
    grid: Dict[str, float] = field(default_factory=dict)

    def score(self, X: np.ndarray) -> np.ndarray:
        neigh = _neighbor_labels(self.points, self.labels, X, self.k)
        _, frac = _agreement(neigh, self.n_classes)
        return 1.0 - frac


def reject_score(rs: Optional[RejectScore], x: np.ndarray) -> float:
    if rs is None:
        raise ModelError("reject score used before fitting")
    return float(rs.score(x)[0])


def grid_search_threshold(X: np.ndarray, y: np.ndarray, k: int, n_folds: int = 5, seed: int = 0) -> Tuple[float, Dict[str, float]]:
    """Pick θ from {j/k} maximising accept-accuracy over validation folds.

    Accept-accuracy is the fraction of validation points where "accepted"
    (r <= θ) coincides with "k-NN prediction correct". Ties keep the smaller θ.
    """
    n_classes = int(y.max()) + 1
    counts = np.bincount(y)
    folds = max(2, min(n_folds, int(counts[counts > 0].min())))
    if folds <= int(counts[counts > 0].min()):
        splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    else:
        splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    grid = np.arange(k + 1) / k
    hits = np.zeros(grid.size)
    total = 0
    for tr, va in splitter.split(X, y):
        kk = min(k, tr.size)
        neigh = _neighbor_labels(X[tr], y[tr], X[va], kk)
        pred, frac = _agreement(neigh, n_classes)
        r = 1.0 - frac
        correct = pred == y[va]
        for j, theta in enumerate(grid):
            hits[j] += float(np.sum((r <= theta + 1e-12) == correct))
        total += va.size
    acc = hits / max(total, 1)
    best = int(np.argmax(acc))
    table = {f"{theta:.6f}": float(a) for theta, a in zip(grid, acc)}
    return float(grid[best]), table


def fit_reject_score(
    X: np.ndarray,
    y: np.ndarray,
    k: int = 5,
    threshold: Optional[float] = None,
    n_folds: int = 5,
    seed: int = 0,
) -> RejectScore:
    """Fit the k-NN reject score; θ is grid-searched unless given."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    if X.shape[0] == 0:
        raise ModelError("reject score needs training instances")
    if k < 1 or k > X.shape[0]:
        raise ModelError(f"reject score k={k} outside 1..{X.shape[0]}")
    grid: Dict[str, float] = {}
    if threshold is None:
        if np.unique(y).size < 2:
            threshold = 1.0
        else:
            threshold, grid = grid_search_threshold(X, y, k, n_folds=n_folds, seed=seed)
    logger.debug("Reject score fitted", extra={"k": k, "threshold": threshold})
    return RejectScore(k=k, threshold=float(threshold), points=X, labels=y, n_classes=int(y.max()) + 1, grid=grid)
