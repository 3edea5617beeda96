from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict

import joblib
import numpy as np
from sklearn.ensemble import RandomForestClassifier

from src.data import Dataset

from .errors import ModelError


logger = logging.getLogger("model")

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestClassifier:
    """Black-box random forest over encoded instances.

    Class ids are the dataset's integer labels; predict_proba columns follow
    `classes` order.
    """

    estimator: RandomForestClassifier
    classes: np.ndarray
    n_classes: int

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        proba = self.estimator.predict_proba(X)
        # Columns for classes absent from the training fold stay at 0
        out = np.zeros((X.shape[0], self.n_classes))
        out[:, self.classes] = proba
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def predict_one(self, x: np.ndarray) -> int:
        return int(self.predict(x)[0])

    def save(self, path: str) -> None:
        payload: Dict[str, Any] = {
            "format_version": FORMAT_VERSION,
            "estimator": self.estimator,
            "classes": self.classes,
            "n_classes": self.n_classes,
        }
        joblib.dump(payload, path)

    @classmethod
    def load(cls, path: str) -> "ForestClassifier":
        payload = joblib.load(path)
        version = payload.get("format_version") if isinstance(payload, dict) else None
        if version != FORMAT_VERSION:
            raise ModelError(f"unsupported classifier format version {version!r}")
        return cls(estimator=payload["estimator"], classes=payload["classes"], n_classes=payload["n_classes"])


def fit_classifier(train: Dataset, n_trees: int = 100, seed: int = 0) -> ForestClassifier:
    """Train the random forest (unlimited depth, sqrt(F) features per split)."""
    X, y = train.X, np.asarray(train.y, dtype=int)
    n_classes = len(train.classes)
    present = np.unique(y)
    if present.size < 2:
        raise ModelError("classifier training needs at least 2 classes")
    est = RandomForestClassifier(
        n_estimators=n_trees,
        max_depth=None,
        max_features="sqrt",
        bootstrap=True,
        random_state=seed,
        n_jobs=1,
    )
    est.fit(np.asarray(X, dtype=float), y)
    acc = float(np.mean(est.predict(X) == y))
    logger.info("Classifier trained", extra={"trees": n_trees, "train_accuracy": round(acc, 4)})
    return ForestClassifier(estimator=est, classes=est.classes_.astype(int), n_classes=n_classes)
