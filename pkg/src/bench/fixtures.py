from __future__ import annotations

import logging
import os
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from src.data import Dataset, from_frame, parse_schema
from src.sf_free.scm import SCMSpec, parse_scm
from src.util.artifact_store import write_json


logger = logging.getLogger("bench.fixtures")

TWO_GAUSSIAN_SCHEMA = {
    "columns": [
        {"name": "x1", "kind": "continuous", "mutable": True},
        {"name": "x2", "kind": "continuous", "mutable": True},
        {"name": "segment", "kind": "categorical", "mutable": True, "categories": ["a", "b", "c"]},
        {"name": "label", "label": True},
    ]
}

CAUSAL_CHAIN_SCHEMA = {
    "columns": [
        {"name": "effort", "kind": "continuous", "mutable": True},
        {"name": "skill", "kind": "continuous", "mutable": True},
        {"name": "output", "kind": "continuous", "mutable": True},
        {"name": "tenure", "kind": "continuous", "mutable": False},
        {"name": "label", "label": True},
    ]
}

CAUSAL_CHAIN_SCM = {
    "equations": [
        {"child": "skill", "parents": ["effort"], "coefficients": [0.5], "intercept": 0.0},
        {"child": "output", "parents": ["skill"], "coefficients": [0.8], "intercept": 0.0},
    ]
}


def two_gaussian_frame(n: int = 500, seed: int = 0) -> pd.DataFrame:
    """Two balanced Gaussian blobs at (-1.5, -1.5) and (1.5, 1.5) plus an
    uninformative categorical column."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    centers = np.where(y[:, None] == 1, 1.5, -1.5)
    X = centers + rng.standard_normal((n, 2))
    segment = rng.choice(["a", "b", "c"], size=n)
    return pd.DataFrame(
        {"x1": X[:, 0], "x2": X[:, 1], "segment": segment, "label": np.where(y == 1, "pos", "neg")}
    )


def causal_chain_frame(n: int = 500, seed: int = 0) -> pd.DataFrame:
    """effort -> skill -> output, with an immutable tenure column; the
    label thresholds output + 0.5 * tenure at its median."""
    rng = np.random.default_rng(seed)
    scm = parse_scm(CAUSAL_CHAIN_SCM)
    roots = {"effort": rng.uniform(0.0, 10.0, n)}
    noise = {"skill": rng.normal(0.0, 1.0, n), "output": rng.normal(0.0, 1.0, n)}
    values = scm.evaluate(roots, noise)
    tenure = rng.normal(5.0, 2.0, n)
    score = values["output"] + 0.5 * tenure
    label = np.where(score > np.median(score), "high", "low")
    return pd.DataFrame(
        {"effort": values["effort"], "skill": values["skill"], "output": values["output"], "tenure": tenure, "label": label}
    )


def builtin_dataset(kind: str, n: int = 500, seed: int = 0, name: Optional[str] = None) -> Tuple[Dataset, Optional[SCMSpec]]:
    if kind == "two_gaussian":
        return from_frame(two_gaussian_frame(n, seed), parse_schema(TWO_GAUSSIAN_SCHEMA), name or kind), None
    if kind == "causal_chain":
        ds = from_frame(causal_chain_frame(n, seed), parse_schema(CAUSAL_CHAIN_SCHEMA), name or kind)
        return ds, parse_scm(CAUSAL_CHAIN_SCM)
    raise ValueError(f"Unknown builtin fixture '{kind}'")


def write_fixtures(out_dir: str, n: int = 500, seed: int = 0) -> Dict[str, str]:
    """Write both fixtures as CSV + schema JSON (+ SCM JSON for the chain)."""
    os.makedirs(out_dir, exist_ok=True)
    written: Dict[str, str] = {}
    for kind, frame, schema in (
        ("two_gaussian", two_gaussian_frame(n, seed), TWO_GAUSSIAN_SCHEMA),
        ("causal_chain", causal_chain_frame(n, seed), CAUSAL_CHAIN_SCHEMA),
    ):
        csv_path = os.path.join(out_dir, f"{kind}.csv")
        frame.to_csv(csv_path, index=False)
        write_json(schema, os.path.join(out_dir, f"{kind}.schema.json"))
        written[kind] = csv_path
    write_json(CAUSAL_CHAIN_SCM, os.path.join(out_dir, "causal_chain.scm.json"))
    logger.info("Fixtures written", extra={"out_dir": out_dir, "rows": n})
    return written
