from __future__ import annotations

import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field

from src.explain import ExplainContext, Explainer, ExplanationFailure, SemiFactual
from src.model import ModelError, fit_local_surrogate, local_region
from src.model.surrogate import log_loss


logger = logging.getLogger("sf.local_region")

METHOD_ID = "local_region"


class LocalRegionParams(BaseModel):
    min_per_class: int = Field(200, ge=1, description="Instances taken from each side of the boundary")
    l2: float = Field(1e-3, ge=0.0)
    max_iter: int = Field(500, ge=1)


def local_region_sf(
    q: np.ndarray,
    ctx: ExplainContext,
    seed: int = 0,
    query_id: int = 0,
    params: Optional[LocalRegionParams] = None,
) -> SemiFactual:
    """Query-class member of q's neighbourhood with the lowest surrogate
    probability of the query class (the most marginal in-class instance)."""
    p = params or LocalRegionParams()
    qc = ctx.query_class(q)
    in_class = ctx.train_pred == qc
    try:
        region = local_region(q, ctx.X, in_class, min_per_class=p.min_per_class)
        targets = in_class[region].astype(float)
        surrogate = fit_local_surrogate(ctx.X[region], targets, seed=seed, l2=p.l2, max_iter=p.max_iter)
    except ModelError as exc:
        raise ExplanationFailure(METHOD_ID, str(exc)) from exc

    members = set(ctx.class_members(qc, exclude=q).tolist())
    candidates = np.array([i for i in region if i in members], dtype=int)
    if candidates.size == 0:
        raise ExplanationFailure(METHOD_ID, "no query-class candidates in the local region")
    prob = surrogate.predict_proba(ctx.X[candidates])
    # candidates are in ascending index order, so argmin keeps the lowest index on ties
    best = int(np.argmin(prob))
    idx = int(candidates[best])
    region_loss = log_loss(surrogate.predict_proba(ctx.X[region]), targets)
    return ctx.semifactual(
        q,
        ctx.X[idx],
        METHOD_ID,
        query_id,
        query_class=qc,
        diagnostics={
            "train_index": idx,
            "surrogate_probability": float(prob[best]),
            "region_size": int(region.size),
            "surrogate_log_loss": float(region_loss),
        },
    )


class LocalRegionExplainer(Explainer):
    method_id = METHOD_ID
    family = "counterfactual_free"
    Params = LocalRegionParams

    def explain(self, q: np.ndarray, query_id: int = 0, seed: int = 0) -> List[SemiFactual]:
        return [local_region_sf(q, self.ctx, seed=seed, query_id=query_id, params=self.params)]
