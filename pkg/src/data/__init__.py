"""Dataset ingestion, encoding, statistics and fold planning."""

from .dataset import Dataset, FeatureStats, Scaling, build_dataset, feature_stats, from_frame, load_dataset, minmax_scale
from .folds import FoldPlan, split_kfold
from .schema import DatasetError, FeatureKind, FeatureSchema, FeatureSpace, load_schema, parse_schema

__all__ = [
    "Dataset",
    "DatasetError",
    "FeatureKind",
    "FeatureSchema",
    "FeatureSpace",
    "FeatureStats",
    "FoldPlan",
    "Scaling",
    "build_dataset",
    "feature_stats",
    "from_frame",
    "load_dataset",
    "load_schema",
    "minmax_scale",
    "parse_schema",
    "split_kfold",
]
