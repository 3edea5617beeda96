"""Explanation-quality metrics, slice normalization and rank aggregation."""

from .metrics import (
    METRICS,
    RAW_DIRECTIONS,
    REVERSED,
    Direction,
    MetricUndefined,
    RobustnessResult,
    metric_confusability,
    metric_distance,
    metric_plausibility,
    metric_robustness,
    metric_sparsity,
    normalized_direction,
)
from .ranks import RankTable, compute_ranks
from .report import MetricReport, normalize_scores

__all__ = [
    "METRICS",
    "RAW_DIRECTIONS",
    "REVERSED",
    "Direction",
    "MetricReport",
    "MetricUndefined",
    "RankTable",
    "RobustnessResult",
    "compute_ranks",
    "metric_confusability",
    "metric_distance",
    "metric_plausibility",
    "metric_robustness",
    "metric_sparsity",
    "normalize_scores",
    "normalized_direction",
]
