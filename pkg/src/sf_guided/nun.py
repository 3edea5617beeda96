from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.explain import ExplainContext
from src.model import ModelError, rank_by_distance


@dataclass(frozen=True)
class Nun:
    """Nearest unlike neighbour: closest training instance outside the query class."""

    index: int
    instance: np.ndarray
    distance: float
    cls: int


def find_nun(q: np.ndarray, ctx: ExplainContext, query_class: int = None) -> Nun:
    """Ties go to the lowest training index. Classes are the training labels."""
    qc = ctx.query_class(q) if query_class is None else query_class
    unlike = np.flatnonzero(ctx.train.y != qc)
    if unlike.size == 0:
        raise ModelError("no training instance outside the query class")
    dist = np.linalg.norm(ctx.X[unlike] - np.asarray(q)[None, :], axis=1)
    j = int(rank_by_distance(dist)[0])
    idx = int(unlike[j])
    return Nun(index=idx, instance=ctx.X[idx].copy(), distance=float(dist[j]), cls=int(ctx.train.y[idx]))
