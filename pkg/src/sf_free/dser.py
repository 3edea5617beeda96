from __future__ import annotations

import logging
from typing import Iterable, List, Optional, Set

import numpy as np
from pydantic import BaseModel, Field

from src.data import FeatureSpace
from src.explain import ExplainContext, Explainer, ExplanationFailure, SemiFactual
from src.model import ForestClassifier, RejectScore, fit_reject_score

from .evolution import evolve, feature_blocks, unit_bounds


logger = logging.getLogger("sf.dser")

METHOD_ID = "dser"


class DserConfig(BaseModel):
    c_feasible: float = Field(1.0, ge=0.0)
    c_sf: float = Field(1.0, ge=0.0)
    c_sparse: float = Field(1.0, ge=0.0)
    c_similar: float = Field(1.0, ge=0.0)
    c_diverse: float = Field(1.0, ge=0.0)
    mu: int = Field(1, ge=1, description="Changed features allowed before the sparsity penalty applies")
    theta: Optional[float] = Field(None, ge=0.0, le=1.0, description="Reject threshold; grid-searched when unset")
    reject_k: int = Field(5, ge=1)
    n_diverse: int = Field(3, ge=1)
    budget: int = Field(2000, ge=1)
    population: int = Field(20, ge=1)
    offspring: int = Field(40, ge=1)
    sigma: float = Field(0.1, gt=0.0)
    restarts: int = Field(3, ge=0)


def changed_counts(space: FeatureSpace, X: np.ndarray, q: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """(n, F) boolean matrix: feature differs from q at all."""
    X = np.atleast_2d(X)
    out = np.zeros((X.shape[0], space.n_features), dtype=bool)
    for i, s in enumerate(space.slices):
        out[:, i] = np.any(np.abs(X[:, s] - q[s]) > tol, axis=1)
    return out


def dser_loss_batch(
    X: np.ndarray,
    q: np.ndarray,
    cfg: DserConfig,
    rs: RejectScore,
    used_features: Iterable[int],
    space: FeatureSpace,
    theta: Optional[float] = None,
) -> np.ndarray:
    """Combined feasibility + sparsity + similarity + diversity loss per row."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    th = rs.threshold if theta is None else theta
    r_q = float(rs.score(q)[0])
    r_x = rs.score(X)
    feasible = cfg.c_feasible * np.maximum(r_x - th, 0.0) + cfg.c_sf * np.maximum(r_q - r_x, 0.0)
    changed = changed_counts(space, X, q)
    sparse = cfg.c_sparse * np.maximum(changed.sum(axis=1) - cfg.mu, 0)
    similar = -cfg.c_similar * np.linalg.norm(X - q[None, :], axis=1)
    used = sorted(set(used_features))
    reused = changed[:, used].sum(axis=1) if used else np.zeros(X.shape[0])
    diverse = cfg.c_diverse * reused
    return feasible + sparse + similar + diverse


def dser_loss(
    q_sf: np.ndarray,
    q: np.ndarray,
    cfg: DserConfig,
    rs: RejectScore,
    used_features: Iterable[int],
    space: FeatureSpace,
) -> float:
    return float(dser_loss_batch(q_sf, q, cfg, rs, used_features, space)[0])


def _search(
    q: np.ndarray,
    qc: int,
    classifier: ForestClassifier,
    rs: RejectScore,
    cfg: DserConfig,
    used: Set[int],
    space: FeatureSpace,
    rng: np.random.Generator,
):
    def loss_fn(X: np.ndarray) -> np.ndarray:
        loss = dser_loss_batch(X, q, cfg, rs, used, space)
        valid = classifier.predict(X) == qc
        return np.where(valid, loss, np.inf)

    lo, hi = unit_bounds(q)
    return evolve(
        loss_fn,
        q,
        feature_blocks(space, space.mutable_features()),
        rng,
        budget=cfg.budget,
        population=cfg.population,
        offspring=cfg.offspring,
        sigma=cfg.sigma,
        lower=lo,
        upper=hi,
    )


def dser_sf(
    q: np.ndarray,
    ctx: ExplainContext,
    rs: RejectScore,
    cfg: DserConfig,
    n_diverse: Optional[int] = None,
    seed: int = 0,
    query_id: int = 0,
) -> List[SemiFactual]:
    """Sequential semi-factuals; each one's changed features join the
    used set that the diversity term penalises for the next."""
    n = cfg.n_diverse if n_diverse is None else n_diverse
    if n < 1:
        raise ValueError("n_diverse must be >= 1")
    space = ctx.train.space
    qc = ctx.query_class(q)
    used: Set[int] = set()
    out: List[SemiFactual] = []
    seeds = np.random.SeedSequence(seed).spawn(n * (cfg.restarts + 1))
    for j in range(n):
        result = None
        for attempt in range(cfg.restarts + 1):
            rng = np.random.default_rng(seeds[j * (cfg.restarts + 1) + attempt])
            res = _search(q, qc, ctx.classifier, rs, cfg, used, space, rng)
            if np.isfinite(res.best_loss) and not np.array_equal(res.best, q):
                result = res
                break
            logger.debug("DSER restart", extra={"query_id": query_id, "explanation": j, "attempt": attempt})
        if result is None:
            raise ExplanationFailure(METHOD_ID, f"no valid semi-factual for explanation {j} within budget")
        changed = changed_counts(space, result.best, q)[0]
        sf = ctx.semifactual(
            q,
            result.best,
            METHOD_ID,
            query_id,
            query_class=qc,
            diagnostics={
                "loss": result.best_loss,
                "initial_best_loss": result.initial_best_loss,
                "evaluations": result.evaluations,
                "reject_score": float(rs.score(result.best)[0]),
                "theta": rs.threshold,
            },
        )
        if not sf.valid:
            raise ExplanationFailure(METHOD_ID, "optimiser returned an invalid instance")
        out.append(sf)
        used.update(int(i) for i in np.flatnonzero(changed))
    return out


class DserExplainer(Explainer):
    method_id = METHOD_ID
    family = "counterfactual_free"
    Params = DserConfig

    def __init__(self, ctx: ExplainContext, params=None) -> None:
        super().__init__(ctx, params)
        k = min(self.params.reject_k, len(ctx.train))
        self.reject = fit_reject_score(ctx.X, ctx.train.y, k=k, threshold=self.params.theta, seed=ctx.seed)
        logger.info("DSER reject score ready", extra={"k": k, "theta": self.reject.threshold})

    def explain(self, q: np.ndarray, query_id: int = 0, seed: int = 0) -> List[SemiFactual]:
        return dser_sf(q, self.ctx, self.reject, self.params, seed=seed, query_id=query_id)

    def primary(self, q: np.ndarray, seed: int = 0) -> np.ndarray:
        return dser_sf(q, self.ctx, self.reject, self.params, n_diverse=1, seed=seed)[0].instance
