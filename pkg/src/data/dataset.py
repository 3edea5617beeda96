from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .schema import (
    ColumnSpec,
    DatasetError,
    FeatureKind,
    FeatureSchema,
    FeatureSpace,
    SchemaDocument,
    load_schema,
)


logger = logging.getLogger("data")


@dataclass(frozen=True)
class FeatureStats:
    """Population statistics, one entry per column."""

    mean: np.ndarray
    std: np.ndarray
    min: np.ndarray
    max: np.ndarray

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "min": self.min.tolist(),
            "max": self.max.tolist(),
        }


def feature_stats(data: Union["Dataset", np.ndarray]) -> FeatureStats:
    """Mean, population std, min and max per column."""
    X = data.X if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DatasetError("feature statistics need a non-empty dataset")
    if X.shape[0] < 2:
        raise DatasetError("feature statistics need at least 2 instances")
    return FeatureStats(
        mean=X.mean(axis=0),
        std=X.std(axis=0, ddof=0),
        min=X.min(axis=0),
        max=X.max(axis=0),
    )


def minmax_scale(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Min-max scale columns; zero-range columns map to 0."""
    values = np.asarray(values, dtype=float)
    span = np.asarray(hi, dtype=float) - np.asarray(lo, dtype=float)
    safe = np.where(span > 0, span, 1.0)
    out = (values - lo) / safe
    return np.where(span > 0, out, 0.0)


@dataclass(frozen=True)
class Scaling:
    """Raw-space min/max of continuous features (indexed by feature)."""

    lo: np.ndarray
    hi: np.ndarray


@dataclass(frozen=True)
class Dataset:
    name: str
    X: np.ndarray
    y: np.ndarray
    classes: Tuple[str, ...]
    space: FeatureSpace
    raw: np.ndarray
    scaling: Scaling
    stats: FeatureStats

    @property
    def schema(self) -> Tuple[FeatureSchema, ...]:
        return self.space.schema

    @property
    def instances(self) -> np.ndarray:
        return self.X

    @property
    def labels(self) -> np.ndarray:
        return self.y

    def __len__(self) -> int:
        return int(self.X.shape[0])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=len(self.classes))

    def subset(self, idx: Sequence[int], scaling: Optional[Scaling] = None) -> "Dataset":
        """Rows idx, re-encoded with the given scaling (default: fitted on the subset)."""
        idx = np.asarray(idx, dtype=int)
        return build_dataset(
            self.name, self.raw[idx], self.y[idx], self.classes, self.space, scaling=scaling
        )

    def split(self, train_idx: Sequence[int], test_idx: Sequence[int]) -> Tuple["Dataset", "Dataset"]:
        """Training subset scaled on itself; test subset scaled with training statistics."""
        train = self.subset(train_idx)
        test = self.subset(test_idx, scaling=train.scaling)
        return train, test

    def encode(self, raw_row: np.ndarray) -> np.ndarray:
        return encode_rows(np.atleast_2d(raw_row), self.space, self.scaling)[0]


def fit_scaling(raw: np.ndarray, space: FeatureSpace) -> Scaling:
    n_feat = space.n_features
    lo = np.zeros(n_feat)
    hi = np.zeros(n_feat)
    for i in space.continuous_features():
        lo[i] = float(np.min(raw[:, i]))
        hi[i] = float(np.max(raw[:, i]))
    return Scaling(lo=lo, hi=hi)


def encode_rows(raw: np.ndarray, space: FeatureSpace, scaling: Scaling) -> np.ndarray:
    """Raw rows (continuous values + integer category codes) -> encoded matrix."""
    n = raw.shape[0]
    X = np.zeros((n, space.n_columns), dtype=float)
    for i, f in enumerate(space.schema):
        block = space.slices[i]
        if f.kind == FeatureKind.CATEGORICAL:
            codes = raw[:, i].astype(int)
            X[np.arange(n), block.start + codes] = 1.0
        else:
            X[:, block.start] = minmax_scale(raw[:, i], scaling.lo[i], scaling.hi[i])
    return X


def build_dataset(
    name: str,
    raw: np.ndarray,
    y: np.ndarray,
    classes: Tuple[str, ...],
    space: FeatureSpace,
    scaling: Optional[Scaling] = None,
) -> Dataset:
    raw = np.asarray(raw, dtype=float)
    y = np.asarray(y, dtype=int)
    if raw.ndim != 2 or raw.shape[1] != space.n_features:
        raise DatasetError("instance arity does not match the schema")
    if raw.shape[0] != y.shape[0]:
        raise DatasetError("instances and labels differ in length")
    if raw.shape[0] == 0:
        raise DatasetError(f"dataset '{name}' is empty")
    if not np.all(np.isfinite(raw)):
        raise DatasetError(f"dataset '{name}' contains non-finite values")
    if scaling is None:
        scaling = fit_scaling(raw, space)
    X = encode_rows(raw, space, scaling)
    stats = feature_stats(X) if X.shape[0] >= 2 else FeatureStats(X[0], np.zeros_like(X[0]), X[0], X[0])
    return Dataset(name=name, X=X, y=y, classes=classes, space=space, raw=raw, scaling=scaling, stats=stats)


def from_frame(frame: pd.DataFrame, schema: SchemaDocument, name: str = "dataset") -> Dataset:
    """Build a Dataset from a DataFrame and a parsed schema document."""
    missing = [c.name for c in schema.columns if c.name not in frame.columns]
    if schema.label not in frame.columns:
        missing.append(schema.label)
    if missing:
        raise DatasetError(f"dataset '{name}' is missing columns: {', '.join(missing)}")
    if frame[schema.label].isna().any():
        raise DatasetError(f"dataset '{name}' has missing labels")

    features = []
    raw = np.zeros((len(frame), len(schema.columns)), dtype=float)
    for i, col in enumerate(schema.columns):
        features.append(_encode_column(frame[col.name], col, raw, i, name))

    label_values = frame[schema.label].astype(str)
    classes = tuple(sorted(label_values.unique()))
    if len(classes) < 2:
        raise DatasetError(f"dataset '{name}' needs at least 2 classes, found {len(classes)}")
    lookup = {c: k for k, c in enumerate(classes)}
    y = label_values.map(lookup).to_numpy(dtype=int)

    space = FeatureSpace(tuple(features))
    ds = build_dataset(name, raw, y, classes, space)
    logger.info(
        "Dataset loaded",
        extra={"dataset": name, "rows": len(ds), "features": space.n_features, "classes": len(classes)},
    )
    return ds


def _encode_column(series: pd.Series, col: ColumnSpec, raw: np.ndarray, i: int, name: str) -> FeatureSchema:
    if series.isna().any():
        raise DatasetError(f"dataset '{name}': column '{col.name}' has missing values")
    if col.kind == FeatureKind.CATEGORICAL:
        values = series.astype(str)
        cats = col.categories if col.categories is not None else tuple(sorted(values.unique()))
        lookup = {c: k for k, c in enumerate(cats)}
        unknown = sorted(set(values.unique()) - set(lookup))
        if unknown:
            raise DatasetError(
                f"dataset '{name}': column '{col.name}' has unknown categories {unknown}"
            )
        raw[:, i] = values.map(lookup).to_numpy(dtype=float)
        return FeatureSchema(name=col.name, kind=col.kind, mutable=col.mutable, categories=tuple(cats))
    numeric = pd.to_numeric(series, errors="coerce")
    if numeric.isna().any():
        bad = series[numeric.isna()].iloc[0]
        raise DatasetError(
            f"dataset '{name}': column '{col.name}' has non-numeric value {bad!r}"
        )
    values = numeric.to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise DatasetError(f"dataset '{name}': column '{col.name}' has non-finite values")
    raw[:, i] = values
    return FeatureSchema(name=col.name, kind=col.kind, mutable=col.mutable)


def load_dataset(path: str, schema_path: str, name: Optional[str] = None) -> Dataset:
    """Read a UTF-8 CSV with header plus its JSON schema.

    Continuous features are min-max scaled to [0,1] using the loaded rows as
    training statistics; categorical features are one-hot encoded.
    """
    schema = load_schema(schema_path)
    try:
        frame = pd.read_csv(path, encoding="utf-8", dtype=str, keep_default_na=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DatasetError(f"cannot read dataset '{path}': {e}") from e
    frame.columns = [c.strip() for c in frame.columns]
    return from_frame(frame, schema, name=name or _stem(path))


def _stem(path: str) -> str:
    base = path.replace("\\", "/").rsplit("/", 1)[-1]
    return base.rsplit(".", 1)[0] if "." in base else base
