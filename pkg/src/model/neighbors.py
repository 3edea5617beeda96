from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ModelError


@dataclass(frozen=True)
class NeighborIndex:
    """Exhaustive Euclidean index; results are exact at desk scale."""

    points: np.ndarray

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def distances(self, query: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.points - np.asarray(query, dtype=float)[None, :], axis=1)


def build_index(points: np.ndarray) -> NeighborIndex:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise ModelError("cannot index an empty point set")
    return NeighborIndex(points=pts)


def rank_by_distance(dist: np.ndarray) -> np.ndarray:
    """Indices sorted by ascending distance, ties broken by lowest index."""
    return np.argsort(dist, kind="stable")


def knn(index: NeighborIndex, query: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """k nearest stored points as (indices, distances), ascending."""
    if len(index) == 0:
        raise ModelError("k-NN index is empty")
    if k < 1 or k > len(index):
        raise ModelError(f"k={k} outside 1..{len(index)}")
    dist = index.distances(query)
    order = rank_by_distance(dist)[:k]
    return order, dist[order]


def sample_ball(rng: np.random.Generator, center: np.ndarray, radius: float, n: int, columns: np.ndarray) -> np.ndarray:
    """n points drawn uniformly from the L2 ball of the given radius around
    center, restricted to the listed columns (other columns copy center)."""
    center = np.asarray(center, dtype=float)
    cols = np.asarray(columns, dtype=int)
    out = np.repeat(center[None, :], n, axis=0)
    if cols.size == 0 or radius <= 0:
        return out
    d = cols.size
    direction = rng.standard_normal((n, d))
    direction /= np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-300)
    r = radius * rng.random(n) ** (1.0 / d)
    out[:, cols] += direction * r[:, None]
    return out
