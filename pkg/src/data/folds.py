from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np
from sklearn.model_selection import KFold, StratifiedKFold

from .dataset import Dataset
from .schema import DatasetError


logger = logging.getLogger("data")


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int
    stratified: bool

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def folds(self) -> Iterator[Tuple[int, np.ndarray, np.ndarray]]:
        for f in range(self.k):
            yield f, self.train_indices(f), self.test_indices(f)


def split_kfold(dataset: Dataset, k: int, seed: int) -> FoldPlan:
    """Deterministic k-fold plan; stratified when every class has >= k members."""
    n = len(dataset)
    if k < 2:
        raise DatasetError(f"k-fold needs k >= 2, got {k}")
    if k > n:
        raise DatasetError(f"k={k} exceeds dataset size {n}")
    counts = dataset.class_counts()
    stratified = bool(np.all(counts[counts > 0] >= k))
    splitter = (
        StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
        if stratified
        else KFold(n_splits=k, shuffle=True, random_state=seed)
    )
    assignments = np.full(n, -1, dtype=int)
    for fold, (_, test_idx) in enumerate(splitter.split(np.zeros((n, 1)), dataset.y)):
        assignments[test_idx] = fold
    logger.debug("Fold plan built", extra={"dataset": dataset.name, "k": k, "stratified": stratified})
    return FoldPlan(k=k, assignments=assignments, seed=seed, stratified=stratified)
