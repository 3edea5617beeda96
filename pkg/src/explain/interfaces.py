from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, List, Mapping, Optional, Tuple, Type

import numpy as np
from pydantic import BaseModel, ValidationError

from src.data import Dataset
from src.model import ForestClassifier


SAMENESS_THRESHOLD = 0.2


class ExplanationFailure(RuntimeError):
    """A method exhausted its budget or had no admissible candidate."""

    def __init__(self, method: str, reason: str) -> None:
        super().__init__(f"{method}: {reason}")
        self.method = method
        self.reason = reason


@dataclass(frozen=True)
class SemiFactual:
    instance: np.ndarray
    query_id: int
    method: str
    valid: bool
    changed_features: Tuple[int, ...]
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "query_id": self.query_id,
            "method": self.method,
            "valid": self.valid,
            "instance": [float(v) for v in self.instance],
            "changed_features": list(self.changed_features),
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class ExplainContext:
    """Everything a method may read for one training fold.

    Immutable and shared read-only by every explainer of the fold.
    """

    train: Dataset
    classifier: ForestClassifier
    train_pred: np.ndarray
    scm: Optional[Any] = None
    seed: int = 0
    sameness: float = SAMENESS_THRESHOLD

    @classmethod
    def build(cls, train: Dataset, classifier: ForestClassifier, scm: Optional[Any] = None, seed: int = 0) -> "ExplainContext":
        return cls(train=train, classifier=classifier, train_pred=classifier.predict(train.X), scm=scm, seed=seed)

    @property
    def X(self) -> np.ndarray:
        return self.train.X

    @property
    def std(self) -> np.ndarray:
        return self.train.stats.std

    def query_class(self, q: np.ndarray) -> int:
        return self.classifier.predict_one(q)

    def class_members(self, cls: int, exclude: Optional[np.ndarray] = None) -> np.ndarray:
        """Training rows labelled cls and predicted cls, minus exact copies of exclude."""
        mask = (self.train.y == cls) & (self.train_pred == cls)
        if exclude is not None:
            mask &= ~np.all(self.train.X == np.asarray(exclude)[None, :], axis=1)
        return np.flatnonzero(mask)

    def changed(self, q: np.ndarray, x: np.ndarray) -> Tuple[int, ...]:
        return tuple(self.train.space.changed_features(q, x, self.std, self.sameness))

    def semifactual(
        self,
        q: np.ndarray,
        x: np.ndarray,
        method: str,
        query_id: int,
        query_class: Optional[int] = None,
        diagnostics: Optional[Mapping[str, Any]] = None,
    ) -> SemiFactual:
        """Wrap x with its validity flag and changed-feature set."""
        qc = self.query_class(q) if query_class is None else query_class
        x = np.asarray(x, dtype=float).copy()
        return SemiFactual(
            instance=x,
            query_id=query_id,
            method=method,
            valid=bool(self.classifier.predict_one(x) == qc),
            changed_features=self.changed(q, x),
            diagnostics=dict(diagnostics or {}),
        )


def parse_params(model: Type[BaseModel], method: str, params: Optional[Mapping[str, Any]]) -> BaseModel:
    try:
        return model(**dict(params or {}))
    except ValidationError as exc:
        raise ValueError(f"invalid parameters for {method}: {exc}") from exc


class Explainer(ABC):
    """A fitted semi-factual method bound to one training fold."""

    method_id: ClassVar[str]
    family: ClassVar[str]
    Params: ClassVar[Type[BaseModel]]

    def __init__(self, ctx: ExplainContext, params: Optional[Mapping[str, Any]] = None) -> None:
        self.ctx = ctx
        self.params = parse_params(self.Params, self.method_id, params)

    @abstractmethod
    def explain(self, q: np.ndarray, query_id: int = 0, seed: int = 0) -> List[SemiFactual]:
        """Semi-factuals for q. Raises ExplanationFailure when none is found."""
        ...

    def primary(self, q: np.ndarray, seed: int = 0) -> np.ndarray:
        """First explanation only; the function probed by the robustness metric."""
        return self.explain(q, seed=seed)[0].instance

    def fail(self, reason: str) -> ExplanationFailure:
        return ExplanationFailure(self.method_id, reason)
