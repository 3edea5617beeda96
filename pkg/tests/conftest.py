import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Ensure project root is on sys.path so "src" package is importable
sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from src.bench.fixtures import builtin_dataset  # noqa: E402
from src.data import FeatureKind, FeatureSchema, FeatureSpace, from_frame, parse_schema  # noqa: E402
from src.explain import ExplainContext  # noqa: E402
from src.model import fit_classifier  # noqa: E402


def _continuous_space(n: int) -> FeatureSpace:
    return FeatureSpace(tuple(FeatureSchema(f"f{i}", FeatureKind.CONTINUOUS) for i in range(n)))


@pytest.fixture
def continuous_space():
    return _continuous_space


@pytest.fixture(scope="session")
def gaussian_dataset():
    ds, _ = builtin_dataset("two_gaussian", n=200, seed=3)
    return ds


@pytest.fixture(scope="session")
def gaussian_ctx(gaussian_dataset):
    clf = fit_classifier(gaussian_dataset, n_trees=25, seed=0)
    return ExplainContext.build(gaussian_dataset, clf, seed=0)


@pytest.fixture(scope="session")
def chain_ctx():
    ds, scm = builtin_dataset("causal_chain", n=200, seed=5)
    clf = fit_classifier(ds, n_trees=25, seed=0)
    return ExplainContext.build(ds, clf, scm=scm, seed=0)


@pytest.fixture(scope="session")
def line_ctx():
    """1-D fixture: label 'hi' iff x > 5, values 0..10 in steps of 0.25."""
    x = np.arange(0.0, 10.01, 0.25)
    frame = pd.DataFrame({"x": x, "label": np.where(x > 5.0, "hi", "lo")})
    schema = parse_schema({"columns": [{"name": "x"}, {"name": "label", "label": True}]})
    ds = from_frame(frame, schema, "line")
    clf = fit_classifier(ds, n_trees=15, seed=1)
    return ExplainContext.build(ds, clf, seed=0)


def _query_of_class(ctx: ExplainContext, cls: int) -> np.ndarray:
    """First training row whose label and prediction are cls."""
    return ctx.X[ctx.class_members(cls)[0]].copy()


@pytest.fixture
def query_of_class():
    return _query_of_class
