from __future__ import annotations

import logging
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel

from src.data import FeatureSpace
from src.explain import ExplainContext, Explainer, ExplanationFailure, SemiFactual
from src.model import ModelError, rank_by_distance

from .nun import Nun, find_nun


logger = logging.getLogger("sf.kleor")

METHOD_ID = "kleor"

Variant = Literal["sim_miss", "global_sim", "attr_sim"]


class KleorParams(BaseModel):
    variant: Variant = "attr_sim"


def similarity(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """1 / (1 + L2), row-wise when u is a matrix."""
    return 1.0 / (1.0 + np.linalg.norm(np.atleast_2d(u) - np.asarray(v)[None, :], axis=1))


def block_distances(space: FeatureSpace, X: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(n, F) per-feature L2 distance of each row to v."""
    X = np.atleast_2d(X)
    return np.stack([np.linalg.norm(X[:, s] - v[s], axis=1) for s in space.slices], axis=1)


def select_kleor(
    q: np.ndarray,
    G: np.ndarray,
    nun: np.ndarray,
    space: FeatureSpace,
    variant: Variant = "attr_sim",
):
    """Index into G of the chosen candidate plus a fallback flag."""
    sim_nun = similarity(G, nun)
    if variant == "sim_miss":
        return int(rank_by_distance(-sim_nun)[0]), False
    if variant == "global_sim":
        sim_q = similarity(G, q)
        threshold = float(similarity(nun, q)[0])
        keep = np.flatnonzero(sim_q > threshold)
        if keep.size == 0:
            return int(rank_by_distance(-sim_nun)[0]), True
        return int(keep[rank_by_distance(-sim_nun[keep])[0]]), False
    # attr_sim: feature count first, then similarity to the NUN, then index
    d_x = block_distances(space, G, q)
    d_nun = block_distances(space, nun[None, :], q)[0]
    count = np.sum(d_x < d_nun[None, :], axis=1)
    order = np.lexsort((np.arange(G.shape[0]), -sim_nun, -count))
    return int(order[0]), False


def kleor_sf(
    q: np.ndarray,
    ctx: ExplainContext,
    variant: Variant = "attr_sim",
    query_id: int = 0,
    nun: Optional[Nun] = None,
) -> SemiFactual:
    qc = ctx.query_class(q)
    try:
        nun = nun or find_nun(q, ctx, qc)
    except ModelError as exc:
        raise ExplanationFailure(METHOD_ID, str(exc)) from exc
    members = ctx.class_members(qc, exclude=q)
    if members.size == 0:
        raise ExplanationFailure(METHOD_ID, "no query-class training instances")
    j, fallback = select_kleor(q, ctx.X[members], nun.instance, ctx.train.space, variant)
    if fallback:
        logger.debug("Global-Sim filter empty, using Sim-Miss", extra={"query_id": query_id})
    idx = int(members[j])
    return ctx.semifactual(
        q,
        ctx.X[idx],
        METHOD_ID,
        query_id,
        query_class=qc,
        diagnostics={
            "train_index": idx,
            "variant": variant,
            "fallback_sim_miss": fallback,
            "nun_index": nun.index,
            "nun_class": nun.cls,
            "nun_distance": nun.distance,
            "sim_to_nun": float(similarity(ctx.X[idx], nun.instance)[0]),
        },
    )


class KleorExplainer(Explainer):
    method_id = METHOD_ID
    family = "counterfactual_guided"
    Params = KleorParams

    def explain(self, q: np.ndarray, query_id: int = 0, seed: int = 0) -> List[SemiFactual]:
        return [kleor_sf(q, self.ctx, self.params.variant, query_id=query_id)]
