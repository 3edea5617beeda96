from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from src.data import Dataset
from src.explain import ExplainContext, Explainer, ExplanationFailure, SemiFactual
from src.model import ForestClassifier


logger = logging.getLogger("sf.dice")

METHOD_ID = "dice"


class DiceConfig(BaseModel):
    k: int = Field(3, ge=1, description="Diverse explanations returned")
    lambda1: float = Field(0.5, ge=0.0, description="Weight of the proximity term")
    lambda2: float = Field(1.0, ge=0.0, description="Weight of the dpp diversity term")
    budget: int = Field(2000, ge=1, description="Random candidates drawn")
    subsets: int = Field(500, ge=1, description="Random k-subsets scored")


def mad_weights(train: Dataset) -> np.ndarray:
    """Per-column inverse median absolute deviation (MAD of 0 counts as 1).

    One-hot columns weigh 0.5 so a category change costs 1.
    """
    X = train.X
    w = np.full(X.shape[1], 0.5)
    for f in train.space.continuous_features():
        col = train.space.column_of(f)
        mad = float(np.median(np.abs(X[:, col] - np.median(X[:, col]))))
        w[col] = 1.0 / (mad if mad > 0 else 1.0)
    return w


def dice_distance(a: np.ndarray, b: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted L1 between rows of a and b (broadcasting)."""
    return np.sum(np.abs(np.asarray(a) - np.asarray(b)) * weights, axis=-1)


def dpp_diversity(C: np.ndarray, weights: np.ndarray) -> float:
    """det of K_ij = 1 / (1 + dist(c_i, c_j))."""
    C = np.atleast_2d(C)
    D = dice_distance(C[:, None, :], C[None, :, :], weights)
    return float(np.linalg.det(1.0 / (1.0 + D)))


def dice_loss(
    C: np.ndarray,
    q: np.ndarray,
    classifier: ForestClassifier,
    y: int,
    lambda1: float,
    lambda2: float,
    weights: Optional[np.ndarray] = None,
    distance_sign: float = 1.0,
) -> float:
    """mean(yloss) + sign * (lambda1/k) sum dist(c_i, q) - lambda2 * dpp_diversity.

    distance_sign=-1 rewards distance from q, which turns the counterfactual
    objective into the semi-factual one when y is the query class.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    k = C.shape[0]
    w = np.ones(C.shape[1]) if weights is None else weights
    p = classifier.predict_proba(C)[:, y]
    yloss = np.maximum(0.5 - p, 0.0)
    dist = dice_distance(C, q[None, :], w)
    return float(np.mean(yloss) + distance_sign * lambda1 / k * np.sum(dist) - lambda2 * dpp_diversity(C, w))


@dataclass
class DiceSearch:
    indices: np.ndarray
    loss: float
    initial_loss: float
    history: List[float] = field(default_factory=list)


def random_candidates(q: np.ndarray, train: Dataset, n: int, rng: np.random.Generator) -> np.ndarray:
    """q with a random non-empty subset of mutable features resampled uniformly."""
    space = train.space
    mutable = space.mutable_features()
    out = np.repeat(np.asarray(q, dtype=float)[None, :], n, axis=0)
    for row in out:
        n_change = int(rng.integers(1, len(mutable) + 1))
        for f in rng.choice(mutable, n_change, replace=False):
            if space.is_categorical(int(f)):
                space.set_category(row, int(f), int(rng.integers(space.schema[int(f)].width)))
            else:
                row[space.column_of(int(f))] = rng.random()
    return out


def search_subsets(
    n_pool: int,
    kk: int,
    subsets: int,
    loss: Callable[[np.ndarray], float],
    rng: np.random.Generator,
) -> DiceSearch:
    """Random search over sorted kk-subsets of the pool; history holds the
    best-so-far loss after every draw."""
    best = np.sort(rng.choice(n_pool, kk, replace=False))
    best_loss = loss(best)
    search = DiceSearch(indices=best, loss=best_loss, initial_loss=best_loss, history=[best_loss])
    for _ in range(subsets - 1):
        idx = np.sort(rng.choice(n_pool, kk, replace=False))
        value = loss(idx)
        if value < search.loss:
            search.indices, search.loss = idx, value
        search.history.append(search.loss)
    return search


def dice_sf(
    q: np.ndarray,
    ctx: ExplainContext,
    cfg: Optional[DiceConfig] = None,
    k: Optional[int] = None,
    seed: int = 0,
    query_id: int = 0,
) -> List[SemiFactual]:
    """Randomized search for k in-class candidates far from q and from each other."""
    cfg = cfg or DiceConfig()
    k = cfg.k if k is None else k
    if cfg.budget < k:
        raise ValueError("budget must be >= k")
    if not ctx.train.space.mutable_features():
        raise ExplanationFailure(METHOD_ID, "no mutable features")
    rng = np.random.default_rng(seed)
    qc = ctx.query_class(q)
    weights = mad_weights(ctx.train)

    pool = random_candidates(q, ctx.train, cfg.budget, rng)
    pool = pool[ctx.classifier.predict(pool) == qc]
    pool = pool[~np.all(pool == q[None, :], axis=1)]
    if pool.shape[0] == 0:
        raise ExplanationFailure(METHOD_ID, "no valid candidate within budget")
    pool = np.unique(pool, axis=0)
    kk = min(k, pool.shape[0])

    def loss(idx: np.ndarray) -> float:
        return dice_loss(pool[idx], q, ctx.classifier, qc, cfg.lambda1, cfg.lambda2, weights, distance_sign=-1.0)

    search = search_subsets(pool.shape[0], kk, cfg.subsets, loss, rng)

    out = []
    for i in search.indices:
        sf = ctx.semifactual(
            q,
            pool[i],
            METHOD_ID,
            query_id,
            query_class=qc,
            diagnostics={
                "loss": search.loss,
                "initial_loss": search.initial_loss,
                "pool_size": int(pool.shape[0]),
                "target_class": qc,
                "distance_sign": -1.0,
            },
        )
        out.append(sf)
    if kk < k:
        logger.debug("DiCE pool smaller than k", extra={"query_id": query_id, "pool": int(pool.shape[0]), "k": k})
    return out


class DiceExplainer(Explainer):
    method_id = METHOD_ID
    family = "counterfactual_guided"
    Params = DiceConfig

    def explain(self, q: np.ndarray, query_id: int = 0, seed: int = 0) -> List[SemiFactual]:
        return dice_sf(q, self.ctx, self.params, seed=seed, query_id=query_id)

    def primary(self, q: np.ndarray, seed: int = 0) -> np.ndarray:
        return dice_sf(q, self.ctx, self.params, k=1, seed=seed)[0].instance
