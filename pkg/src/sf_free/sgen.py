from __future__ import annotations

import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field
from scipy.spatial.distance import cdist, pdist

from src.explain import ExplainContext, Explainer, ExplanationFailure, SemiFactual
from src.model import sample_ball

from .evolution import SearchBlock, evolve
from .scm import IDENTITY, BoundSCM, bind_scm


logger = logging.getLogger("sf.sgen")

METHOD_ID = "sgen"


class SgenConfig(BaseModel):
    m: int = Field(3, ge=1, description="Diverse explanations optimised jointly")
    gamma: float = Field(0.5, ge=0.0, description="Weight of the diversity term")
    psi: float = Field(0.5, gt=0.0, lt=1.0, description="Minimum query-class probability over the neighbourhood")
    radius: float = Field(0.05, ge=0.0)
    neighborhood_samples: int = Field(50, ge=1)
    beta: float = Field(0.5, ge=0.0, le=1.0, description="Weight of plausibility against gain")
    density_k: int = Field(5, ge=1)
    budget: int = Field(2000, ge=1)
    population: int = Field(20, ge=1)
    offspring: int = Field(40, ge=1)
    sigma: float = Field(0.1, gt=0.0)
    restarts: int = Field(3, ge=0)


def sgen_outcome(q: np.ndarray, actions: np.ndarray, scm: Optional[BoundSCM] = None) -> np.ndarray:
    """S_M(q, a): apply additive actions, then recompute causal descendants."""
    A = np.atleast_2d(actions)
    return (scm or IDENTITY).propagate(q, q[None, :] + A)


def sgen_gain(q: np.ndarray, action: np.ndarray, scm: Optional[BoundSCM] = None) -> float:
    return float(np.linalg.norm(sgen_outcome(q, action, scm)[0] - q))


def diversity(outcomes: np.ndarray) -> float:
    """Mean pairwise L2 distance; 0 for a single outcome."""
    outcomes = np.atleast_2d(outcomes)
    if outcomes.shape[0] < 2:
        return 0.0
    return float(np.mean(pdist(outcomes)))


def density_proxy(X: np.ndarray, members: np.ndarray, k: int) -> np.ndarray:
    """1 / (1 + distance to the k-th nearest query-class member)."""
    d = cdist(np.atleast_2d(X), members)
    kk = min(k, members.shape[0]) - 1
    kth = np.partition(d, kk, axis=1)[:, kk]
    return 1.0 / (1.0 + kth)


def robust_mask(ctx: ExplainContext, outcomes: np.ndarray, offsets: np.ndarray, qc: int, psi: float) -> np.ndarray:
    """Hard constraint per outcome: the outcome and every point of its sampled
    neighbourhood keep query-class probability >= psi."""
    n, s = outcomes.shape[0], offsets.shape[0]
    pts = np.concatenate([outcomes, (outcomes[:, None, :] + offsets[None, :, :]).reshape(n * s, -1)])
    proba = ctx.classifier.predict_proba(pts)
    p_query = proba[:, qc]
    center_ok = (p_query[:n] >= psi) & (np.argmax(proba[:n], axis=1) == qc)
    worst = p_query[n:].reshape(n, s).min(axis=1)
    return center_ok & (worst - psi >= 0.0)


def sgen_sf(
    q: np.ndarray,
    ctx: ExplainContext,
    cfg: SgenConfig,
    scm: Optional[BoundSCM] = None,
    m: Optional[int] = None,
    seed: int = 0,
    query_id: int = 0,
) -> List[SemiFactual]:
    """Jointly search m additive actions maximising
    mean(beta * P + (1 - beta) * G) + gamma * R under the robustness constraint."""
    m = cfg.m if m is None else m
    space = ctx.train.space
    scm = scm or IDENTITY
    qc = ctx.query_class(q)
    members = ctx.X[ctx.class_members(qc)]
    if members.shape[0] == 0:
        raise ExplanationFailure(METHOD_ID, "no query-class training instances")
    cols = np.array([space.column_of(i) for i in space.mutable_features() if not space.is_categorical(i)], dtype=int)
    if cols.size == 0:
        raise ExplanationFailure(METHOD_ID, "no mutable continuous features to act on")
    d = q.shape[0]
    rng_seeds = np.random.SeedSequence(seed).spawn(cfg.restarts + 2)
    ball_rng = np.random.default_rng(rng_seeds[0])
    offsets = sample_ball(ball_rng, np.zeros(d), cfg.radius, cfg.neighborhood_samples, space.continuous_columns())

    def expand(V: np.ndarray) -> np.ndarray:
        """(n, m*c) action parameters -> (n*m, d) full-width actions."""
        n = V.shape[0]
        A = np.zeros((n * m, d))
        A[:, cols] = V.reshape(n * m, cols.size)
        return A

    def objective_parts(V: np.ndarray):
        A = expand(V)
        outcomes = sgen_outcome(q, A, scm)
        gain = np.linalg.norm(outcomes - q[None, :], axis=1)
        plaus = density_proxy(outcomes, members, cfg.density_k)
        per_action = cfg.beta * plaus + (1.0 - cfg.beta) * gain
        ok = robust_mask(ctx, outcomes, offsets, qc, cfg.psi)
        return outcomes, gain, plaus, per_action, ok

    def loss_fn(V: np.ndarray) -> np.ndarray:
        outcomes, _, _, per_action, ok = objective_parts(V)
        n = V.shape[0]
        outcomes = outcomes.reshape(n, m, d)
        score = per_action.reshape(n, m).mean(axis=1) + cfg.gamma * np.array([diversity(o) for o in outcomes])
        feasible = ok.reshape(n, m).all(axis=1)
        return np.where(feasible, -score, np.inf)

    blocks = [SearchBlock(columns=slice(j, j + 1)) for j in range(m * cols.size)]
    lo = np.tile(-q[cols], m)
    hi = np.tile(1.0 - q[cols], m)
    result = None
    for attempt in range(cfg.restarts + 1):
        rng = np.random.default_rng(rng_seeds[attempt + 1])
        res = evolve(
            loss_fn,
            np.zeros(m * cols.size),
            blocks,
            rng,
            budget=cfg.budget,
            population=cfg.population,
            offspring=cfg.offspring,
            sigma=cfg.sigma,
            lower=np.minimum(lo, 0.0),
            upper=np.maximum(hi, 0.0),
        )
        if np.isfinite(res.best_loss) and np.any(res.best != 0.0):
            result = res
            break
        logger.debug("S-GEN restart", extra={"query_id": query_id, "attempt": attempt})
    if result is None:
        raise ExplanationFailure(METHOD_ID, "no action satisfies the robustness constraint within budget")

    outcomes, gain, plaus, _, ok = objective_parts(result.best[None, :])
    actions = expand(result.best[None, :])
    out: List[SemiFactual] = []
    for j in range(m):
        if not np.any(actions[j] != 0.0):
            continue
        sf = ctx.semifactual(
            q,
            outcomes[j],
            METHOD_ID,
            query_id,
            query_class=qc,
            diagnostics={
                "gain": float(gain[j]),
                "plausibility": float(plaus[j]),
                "objective": -result.best_loss,
                "robust": bool(ok[j]),
                "evaluations": result.evaluations,
            },
        )
        if sf.valid:
            out.append(sf)
    if not out:
        raise ExplanationFailure(METHOD_ID, "every optimised action was empty")
    return out


class SgenExplainer(Explainer):
    method_id = METHOD_ID
    family = "counterfactual_free"
    Params = SgenConfig

    def __init__(self, ctx: ExplainContext, params=None) -> None:
        super().__init__(ctx, params)
        self.scm = bind_scm(ctx.scm, ctx.train.space, ctx.train.scaling)

    def explain(self, q: np.ndarray, query_id: int = 0, seed: int = 0) -> List[SemiFactual]:
        return sgen_sf(q, self.ctx, self.params, self.scm, seed=seed, query_id=query_id)

    def primary(self, q: np.ndarray, seed: int = 0) -> np.ndarray:
        return sgen_sf(q, self.ctx, self.params, self.scm, m=1, seed=seed)[0].instance
