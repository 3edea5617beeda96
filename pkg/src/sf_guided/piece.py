from __future__ import annotations

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.data import Dataset
from src.explain import ExplainContext, Explainer, ExplanationFailure, SemiFactual
from src.model import GammaParams, ModelError, fit_gamma, tail_probability

from .nun import find_nun


logger = logging.getLogger("sf.piece")

METHOD_ID = "piece"


class PieceConfig(BaseModel):
    alpha: float = Field(0.1, gt=0.0, lt=0.5, description="Two-sided tail probability below which a feature is exceptional")
    steps_per_feature: int = Field(10, ge=1)
    max_iterations: int = Field(100, ge=1)


GammaTable = Dict[Tuple[int, int], GammaParams]


def fit_class_gammas(train: Dataset) -> GammaTable:
    """Gamma model per (class, continuous feature) over scaled training values."""
    table: GammaTable = {}
    for c in np.unique(train.y):
        rows = train.X[train.y == c]
        if rows.shape[0] < 2:
            continue
        for f in train.space.continuous_features():
            col = train.space.column_of(f)
            table[(int(c), f)] = fit_gamma(rows[:, col])
    return table


def exceptional_features(
    q: np.ndarray, cf_class: int, gammas: GammaTable, train: Dataset, alpha: float
) -> List[Tuple[int, float]]:
    """(feature, tail probability) for features exceptional under the
    counterfactual class, most exceptional first."""
    out = []
    for f in train.space.continuous_features():
        params = gammas.get((cf_class, f))
        if params is None:
            continue
        tail = tail_probability(params, float(q[train.space.column_of(f)]))
        if tail < alpha:
            out.append((f, tail))
    out.sort(key=lambda t: (t[1], t[0]))
    return out


def piece_tabular_sf(
    q: np.ndarray,
    ctx: ExplainContext,
    gammas: GammaTable,
    cfg: Optional[PieceConfig] = None,
    query_id: int = 0,
    trace: Optional[List[np.ndarray]] = None,
) -> SemiFactual:
    """Walk exceptional features toward their expected counterfactual-class
    values and keep the last iterate the classifier still assigns to the
    query class. Accepted iterates are appended to trace when given."""
    cfg = cfg or PieceConfig()
    qc = ctx.query_class(q)
    try:
        nun = find_nun(q, ctx, qc)
    except ModelError as exc:
        raise ExplanationFailure(METHOD_ID, str(exc)) from exc
    space = ctx.train.space
    mutable = set(space.mutable_features())
    exceptional = [(f, t) for f, t in exceptional_features(q, nun.cls, gammas, ctx.train, cfg.alpha) if f in mutable]
    diagnostics = {
        "cf_class": nun.cls,
        "exceptional_features": [f for f, _ in exceptional],
        "tail_probabilities": [float(t) for _, t in exceptional],
        "degenerate": not exceptional,
        "crossed": False,
    }
    if not exceptional:
        return ctx.semifactual(q, q, METHOD_ID, query_id, query_class=qc, diagnostics=diagnostics)

    current = np.asarray(q, dtype=float).copy()
    iterations = 0
    for f, _ in exceptional:
        col = space.column_of(f)
        target = gammas[(nun.cls, f)].mean
        start = current[col]
        n = min(cfg.steps_per_feature, cfg.max_iterations - iterations)
        if n <= 0:
            break
        fractions = np.arange(1, n + 1) / cfg.steps_per_feature
        path = np.repeat(current[None, :], n, axis=0)
        path[:, col] = start + (target - start) * fractions
        pred = ctx.classifier.predict(path)
        crossing = np.flatnonzero(pred != qc)
        if crossing.size:
            k = int(crossing[0])
            if trace is not None:
                trace.extend(row.copy() for row in path[:k])
            if k > 0:
                current = path[k - 1].copy()
            iterations += k + 1
            diagnostics["crossed"] = True
            diagnostics["counterfactual"] = [float(v) for v in path[k]]
            diagnostics["crossing_feature"] = f
            break
        if trace is not None:
            trace.extend(row.copy() for row in path)
        current = path[-1].copy()
        iterations += n
    diagnostics["iterations"] = iterations
    sf = ctx.semifactual(q, current, METHOD_ID, query_id, query_class=qc, diagnostics=diagnostics)
    if not sf.valid:
        raise ExplanationFailure(METHOD_ID, "trajectory left the query class")
    return sf


class PieceExplainer(Explainer):
    method_id = METHOD_ID
    family = "counterfactual_guided"
    Params = PieceConfig

    def __init__(self, ctx: ExplainContext, params=None) -> None:
        super().__init__(ctx, params)
        self.gammas = fit_class_gammas(ctx.train)
        logger.debug("PIECE gamma models fitted", extra={"models": len(self.gammas)})

    def explain(self, q: np.ndarray, query_id: int = 0, seed: int = 0) -> List[SemiFactual]:
        return [piece_tabular_sf(q, self.ctx, self.gammas, self.params, query_id=query_id)]
