from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np


class DatasetError(ValueError):
    """Raised for unreadable or inconsistent dataset/schema input."""


class FeatureKind(str, Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class FeatureSchema:
    name: str
    kind: FeatureKind
    mutable: bool = True
    categories: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        if self.kind == FeatureKind.CATEGORICAL:
            if self.categories is None or len(self.categories) < 2:
                raise DatasetError(f"categorical feature '{self.name}' needs at least 2 categories")
            if len(set(self.categories)) != len(self.categories):
                raise DatasetError(f"categorical feature '{self.name}' has duplicate categories")

    @property
    def width(self) -> int:
        """Number of encoded columns (one-hot width for categoricals)."""
        if self.kind == FeatureKind.CATEGORICAL:
            assert self.categories is not None
            return len(self.categories)
        return 1


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: FeatureKind
    mutable: bool
    categories: Optional[Tuple[str, ...]]


@dataclass(frozen=True)
class SchemaDocument:
    columns: Tuple[ColumnSpec, ...]
    label: str


def load_schema(path: str) -> SchemaDocument:
    """Read the JSON schema document.

    Accepted shape: {"columns": [{"name", "kind", "mutable", "label", "categories"?}]}.
    A bare list of column entries is also accepted. The label column is the
    entry with label=true, else the last entry. Categorical columns without
    explicit categories take the sorted distinct values found in the data.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise DatasetError(f"cannot read schema '{path}': {e}") from e
    except json.JSONDecodeError as e:
        raise DatasetError(f"schema '{path}' is not valid JSON: {e}") from e
    return parse_schema(doc)


def parse_schema(doc) -> SchemaDocument:
    entries = doc.get("columns") if isinstance(doc, dict) else doc
    if not isinstance(entries, list) or len(entries) < 2:
        raise DatasetError("schema must list at least one feature and a label column")
    names = [e.get("name") if isinstance(e, dict) else None for e in entries]
    if any(not isinstance(n, str) or not n for n in names):
        raise DatasetError("every schema column needs a non-empty name")
    if len(set(names)) != len(names):
        raise DatasetError("schema column names must be unique")

    label_entries = [e for e in entries if e.get("label")]
    if len(label_entries) > 1:
        raise DatasetError("schema marks more than one label column")
    label_name = label_entries[0]["name"] if label_entries else entries[-1]["name"]

    columns: List[ColumnSpec] = []
    for e in entries:
        if e["name"] == label_name:
            continue
        kind_raw = str(e.get("kind", "continuous")).lower()
        try:
            kind = FeatureKind(kind_raw)
        except ValueError:
            raise DatasetError(f"column '{e['name']}' has unknown kind '{kind_raw}'") from None
        cats = e.get("categories")
        columns.append(
            ColumnSpec(
                name=e["name"],
                kind=kind,
                mutable=bool(e.get("mutable", True)),
                categories=tuple(str(c) for c in cats) if cats is not None else None,
            )
        )
    return SchemaDocument(columns=tuple(columns), label=label_name)


@dataclass(frozen=True)
class FeatureSpace:
    """Maps schema features onto encoded columns.

    Continuous features take one column (min-max scaled), categorical
    features take a one-hot block.
    """

    schema: Tuple[FeatureSchema, ...]
    slices: Tuple[slice, ...] = field(init=False)

    def __post_init__(self) -> None:
        out = []
        start = 0
        for f in self.schema:
            out.append(slice(start, start + f.width))
            start += f.width
        object.__setattr__(self, "slices", tuple(out))

    @property
    def n_features(self) -> int:
        return len(self.schema)

    @property
    def n_columns(self) -> int:
        return self.slices[-1].stop if self.slices else 0

    @property
    def names(self) -> List[str]:
        return [f.name for f in self.schema]

    def continuous_features(self) -> List[int]:
        return [i for i, f in enumerate(self.schema) if f.kind == FeatureKind.CONTINUOUS]

    def continuous_columns(self) -> np.ndarray:
        return np.array([self.slices[i].start for i in self.continuous_features()], dtype=int)

    def mutable_features(self) -> List[int]:
        return [i for i, f in enumerate(self.schema) if f.mutable]

    def is_categorical(self, feature: int) -> bool:
        return self.schema[feature].kind == FeatureKind.CATEGORICAL

    def column_of(self, feature: int) -> int:
        """Encoded column of a continuous feature."""
        return self.slices[feature].start

    def category_index(self, x: np.ndarray, feature: int) -> int:
        return int(np.argmax(x[self.slices[feature]]))

    def set_category(self, x: np.ndarray, feature: int, category: int) -> None:
        block = self.slices[feature]
        x[block] = 0.0
        x[block.start + category] = 1.0

    def decode(self, X: np.ndarray) -> List[Dict[str, object]]:
        """Turn encoded rows back into {feature: value/category} dicts."""
        X = np.atleast_2d(X)
        rows = []
        for x in X:
            row: Dict[str, object] = {}
            for i, f in enumerate(self.schema):
                if f.kind == FeatureKind.CATEGORICAL:
                    assert f.categories is not None
                    row[f.name] = f.categories[self.category_index(x, i)]
                else:
                    row[f.name] = float(x[self.slices[i].start])
            rows.append(row)
        return rows

    def feature_deltas(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Per-feature |a - b|: absolute difference for continuous features,
        0/1 category change for categorical ones."""
        out = np.empty(self.n_features, dtype=float)
        for i, f in enumerate(self.schema):
            if f.kind == FeatureKind.CATEGORICAL:
                out[i] = float(self.category_index(a, i) != self.category_index(b, i))
            else:
                col = self.slices[i].start
                out[i] = abs(float(a[col]) - float(b[col]))
        return out

    def same_mask(self, a: np.ndarray, b: np.ndarray, std: np.ndarray, threshold: float = 0.2) -> np.ndarray:
        """Sameness rule: continuous features match when |delta| <= threshold*std,
        categorical features when the category is unchanged.

        std is per encoded column (only continuous columns are read).
        """
        deltas = self.feature_deltas(a, b)
        same = np.empty(self.n_features, dtype=bool)
        for i, f in enumerate(self.schema):
            if f.kind == FeatureKind.CATEGORICAL:
                same[i] = deltas[i] == 0.0
            else:
                same[i] = deltas[i] <= threshold * float(std[self.slices[i].start])
        return same

    def changed_features(self, a: np.ndarray, b: np.ndarray, std: np.ndarray, threshold: float = 0.2) -> List[int]:
        return [int(i) for i in np.flatnonzero(~self.same_mask(a, b, std, threshold))]

    def project(self, x: np.ndarray, reference: np.ndarray) -> np.ndarray:
        """Snap one-hot blocks to their argmax and copy immutable features from reference."""
        out = np.asarray(x, dtype=float).copy()
        for i, f in enumerate(self.schema):
            s = self.slices[i]
            if not f.mutable:
                out[s] = reference[s]
            elif f.kind == FeatureKind.CATEGORICAL:
                self.set_category(out, i, int(np.argmax(out[s])))
        return out
