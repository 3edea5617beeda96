from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Optional

import numpy as np

from src.data import Dataset, FeatureSpace
from src.explain import ExplanationFailure
from src.model import sample_ball


class MetricUndefined(ValueError):
    pass


class Direction(str, Enum):
    HIGHER = "higher_better"
    LOWER = "lower_better"


METRICS = ("distance", "plausibility", "confusability", "robustness", "sparsity")

# Orientation of the raw scores
RAW_DIRECTIONS: Dict[str, Direction] = {
    "distance": Direction.HIGHER,
    "plausibility": Direction.LOWER,
    "confusability": Direction.LOWER,
    "robustness": Direction.LOWER,
    "sparsity": Direction.HIGHER,
}

# Metrics whose normalized score is 1 - minmax(raw)
REVERSED = frozenset({"robustness"})

DISTANCE_FLOOR = 1e-12


def normalized_direction(metric: str) -> Direction:
    d = RAW_DIRECTIONS[metric]
    if metric in REVERSED:
        return Direction.HIGHER if d == Direction.LOWER else Direction.LOWER
    return d


def _pair(a: np.ndarray, b: np.ndarray):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"arity mismatch: {a.shape} vs {b.shape}")
    return a, b


def metric_distance(q: np.ndarray, sf: np.ndarray) -> float:
    q, sf = _pair(q, sf)
    return float(np.linalg.norm(q - sf))


def _nearest_distinct(x: np.ndarray, X: np.ndarray) -> float:
    if X.shape[0] == 0:
        raise MetricUndefined("no reference instances")
    distinct = ~np.all(X == x[None, :], axis=1)
    if not distinct.any():
        raise MetricUndefined("reference set only holds copies of the explanation")
    return float(np.min(np.linalg.norm(X[distinct] - x[None, :], axis=1)))


def metric_plausibility(sf: np.ndarray, train: Dataset) -> float:
    """Distance to the nearest training instance that is not sf itself."""
    sf = np.asarray(sf, dtype=float)
    return _nearest_distinct(sf, train.X)


def metric_confusability(sf: np.ndarray, train: Dataset, query_class: int, cf_class: int) -> float:
    """1 - d(sf, CF class) / d(sf, query class); lower means clearly in-class."""
    sf = np.asarray(sf, dtype=float)
    d = {}
    for name, cls in (("query", query_class), ("cf", cf_class)):
        rows = train.X[train.y == cls]
        if rows.shape[0] == 0:
            raise MetricUndefined(f"class {cls} absent from training data")
        d[name] = max(_nearest_distinct(sf, rows), DISTANCE_FLOOR)
    return 1.0 - d["cf"] / d["query"]


def metric_sparsity(
    q: np.ndarray,
    sf: np.ndarray,
    space: FeatureSpace,
    std: np.ndarray,
    ideal_diff: int = 1,
    threshold: float = 0.2,
) -> float:
    q, sf = _pair(q, sf)
    observed = len(space.changed_features(q, sf, std, threshold))
    if observed == 0:
        raise MetricUndefined("explanation does not differ from the query")
    return ideal_diff / observed


@dataclass(frozen=True)
class RobustnessResult:
    """Max Lipschitz ratio over successful perturbations plus the number
    of perturbed queries the method failed on."""

    max_ratio: Optional[float]
    failures: int
    n: int

    def resolve(self, slice_max: float) -> float:
        """Worst case for failed perturbations is the slice maximum."""
        own = self.max_ratio if self.max_ratio is not None else 0.0
        return max(own, slice_max) if self.failures else own


def metric_robustness(
    explain: Callable[[np.ndarray], np.ndarray],
    q: np.ndarray,
    epsilon: float = 0.1,
    n: int = 100,
    seed: int = 0,
    columns: Optional[np.ndarray] = None,
    base: Optional[np.ndarray] = None,
) -> RobustnessResult:
    """Local Lipschitz estimate max ||f(q) - f(x_i)|| / ||q - x_i|| over n
    uniform draws x_i from the epsilon-ball around q.

    explain raises on failure; base is f(q) when already known.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    q = np.asarray(q, dtype=float)
    cols = np.arange(q.size) if columns is None else np.asarray(columns, dtype=int)
    rng = np.random.default_rng(seed)
    f_q = explain(q) if base is None else np.asarray(base, dtype=float)
    best: Optional[float] = None
    failures = 0
    for x in sample_ball(rng, q, epsilon, n, cols):
        step = float(np.linalg.norm(x - q))
        if step <= 0.0:
            continue
        try:
            f_x = explain(x)
        except (ExplanationFailure, ValueError):
            failures += 1
            continue
        ratio = float(np.linalg.norm(f_q - np.asarray(f_x, dtype=float))) / step
        best = ratio if best is None else max(best, ratio)
    return RobustnessResult(max_ratio=best, failures=failures, n=n)
