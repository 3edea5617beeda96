from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field

from src.data import FeatureSpace
from src.explain import SAMENESS_THRESHOLD, ExplainContext, Explainer, ExplanationFailure, SemiFactual


logger = logging.getLogger("sf.mdn")

METHOD_ID = "mdn"


class MdnParams(BaseModel):
    scoring: Literal["sfs_v2", "sfs"] = "sfs_v2"
    threshold: float = Field(SAMENESS_THRESHOLD, ge=0.0)


@dataclass(frozen=True)
class MdnCandidate:
    member: int
    feature: int
    direction: str
    score: float
    sfs: float
    same: int


def same_matrix(space: FeatureSpace, q: np.ndarray, M: np.ndarray, std: np.ndarray, threshold: float = SAMENESS_THRESHOLD) -> np.ndarray:
    """(n, F) sameness of each row of M against q."""
    M = np.atleast_2d(M)
    out = np.empty((M.shape[0], space.n_features), dtype=bool)
    for i, s in enumerate(space.slices):
        if space.is_categorical(i):
            out[:, i] = np.argmax(M[:, s], axis=1) == np.argmax(q[s])
        else:
            out[:, i] = np.abs(M[:, s.start] - q[s.start]) <= threshold * std[s.start]
    return out


def sfs_scores(same: np.ndarray, diff: np.ndarray, diff_max: float, n_features: int):
    """(sfs, sfs_v2) for members of one Higher/Lower set."""
    sfs = same / n_features + diff / diff_max
    return sfs, sfs / (n_features - same)


def score_sets(
    q: np.ndarray,
    M: np.ndarray,
    space: FeatureSpace,
    std: np.ndarray,
    scoring: str = "sfs_v2",
    threshold: float = SAMENESS_THRESHOLD,
) -> List[MdnCandidate]:
    """Best-scoring member of every non-empty Higher/Lower (or categorical
    "different") set, in feature order."""
    F = space.n_features
    same = same_matrix(space, q, M, std, threshold)
    n_same = same.sum(axis=1)
    best: List[MdnCandidate] = []
    for f, s in enumerate(space.slices):
        differs = ~same[:, f]
        if space.is_categorical(f):
            sets = [("different", differs, np.ones(M.shape[0]))]
        else:
            delta = M[:, s.start] - q[s.start]
            sets = [("higher", differs & (delta > 0), np.abs(delta)), ("lower", differs & (delta < 0), np.abs(delta))]
        for direction, mask, diff in sets:
            # n_same < F always holds here since the member differs on f
            idx = np.flatnonzero(mask)
            if idx.size == 0:
                continue
            diff_max = float(np.max(diff[idx]))
            if diff_max <= 0.0:
                continue
            sfs, sfs_v2 = sfs_scores(n_same[idx].astype(float), diff[idx], diff_max, F)
            score = sfs_v2 if scoring == "sfs_v2" else sfs
            j = int(np.argmax(score))
            best.append(
                MdnCandidate(
                    member=int(idx[j]),
                    feature=f,
                    direction=direction,
                    score=float(score[j]),
                    sfs=float(sfs[j]),
                    same=int(n_same[idx[j]]),
                )
            )
    return best


def mdn_sf(
    q: np.ndarray,
    ctx: ExplainContext,
    query_id: int = 0,
    params: Optional[MdnParams] = None,
) -> SemiFactual:
    """Most distant neighbour: the overall best of the per-feature best
    candidates. Ties keep the earlier feature, then the lower index."""
    p = params or MdnParams()
    qc = ctx.query_class(q)
    members = ctx.class_members(qc, exclude=q)
    if members.size == 0:
        raise ExplanationFailure(METHOD_ID, "no query-class training instances")
    cands = score_sets(q, ctx.X[members], ctx.train.space, ctx.std, p.scoring, p.threshold)
    if not cands:
        raise ExplanationFailure(METHOD_ID, "every Higher/Lower set is empty")
    scores = np.array([c.score for c in cands])
    top = cands[int(np.argmax(scores))]
    idx = int(members[top.member])
    return ctx.semifactual(
        q,
        ctx.X[idx],
        METHOD_ID,
        query_id,
        query_class=qc,
        diagnostics={
            "train_index": idx,
            "feature": top.feature,
            "direction": top.direction,
            "score": top.score,
            "sfs": top.sfs,
            "scoring": p.scoring,
        },
    )


class MdnExplainer(Explainer):
    method_id = METHOD_ID
    family = "counterfactual_free"
    Params = MdnParams

    def explain(self, q: np.ndarray, query_id: int = 0, seed: int = 0) -> List[SemiFactual]:
        return [mdn_sf(q, self.ctx, query_id=query_id, params=self.params)]
