from __future__ import annotations

import logging
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.explain import ExplainContext, Explainer, ExplanationFailure, SemiFactual
from src.model import ModelError
from src.neural import C2CModel, VAEModel, interpolate, sample_guide, train_c2c, train_vae

from .nun import find_nun


logger = logging.getLogger("sf.c2c")

METHOD_ID = "c2c_vae"


class C2CParams(BaseModel):
    lam: float = Field(0.2, ge=0.0, le=1.0, description="Interpolation weight toward the guide")
    halvings: int = Field(5, ge=0)
    latent_dim: int = Field(4, ge=1)
    hidden: Tuple[int, ...] = (32, 32)
    vae_epochs: int = Field(200, ge=1)
    c2c_epochs: int = Field(100, ge=1)
    c2c_latent_dim: int = Field(4, ge=1)
    pair_budget: int = Field(2000, ge=1)
    learning_rate: float = Field(1e-3, gt=0.0)
    n_samples: int = Field(100, ge=1)


def c2c_sf(
    q: np.ndarray,
    ctx: ExplainContext,
    vae: VAEModel,
    c2c: C2CModel,
    lam: float = 0.2,
    halvings: int = 5,
    n_samples: int = 100,
    seed: int = 0,
    query_id: int = 0,
) -> SemiFactual:
    """Decode (1 - lam) f(q) + lam f(t) for the sampled guide t; halve lam
    while the decode leaves the query class.

    Decodes with lam > 0 are projected (one-hot blocks snapped, immutable
    features copied from q). lam = 0 returns the raw decode of f(q).
    """
    qc = ctx.query_class(q)
    try:
        target = find_nun(q, ctx, qc).cls
    except ModelError as exc:
        raise ExplanationFailure(METHOD_ID, str(exc)) from exc
    guide = sample_guide(c2c, vae, q, qc, target, n_samples=n_samples, seed=seed)
    z_q = vae.encode_mean(q)[0]
    z_t = vae.encode_mean(guide.instance)[0]
    space = ctx.train.space
    _, cf_decode = interpolate(vae, z_q, z_t, 1.0)
    cf = space.project(cf_decode, q)

    current = lam
    for attempt in range(halvings + 1):
        z, decoded = interpolate(vae, z_q, z_t, current)
        x = decoded if current == 0.0 else space.project(decoded, q)
        if ctx.classifier.predict_one(x) == qc:
            return ctx.semifactual(
                q,
                x,
                METHOD_ID,
                query_id,
                query_class=qc,
                diagnostics={
                    "lam": current,
                    "halvings": attempt,
                    "target_class": target,
                    "guide_mse": guide.mse,
                    "latent": [float(v) for v in z],
                    "counterfactual": [float(v) for v in cf],
                    "counterfactual_valid": bool(ctx.classifier.predict_one(cf) == target),
                },
            )
        current /= 2.0
    raise ExplanationFailure(METHOD_ID, f"decode stayed outside the query class after {halvings} halvings")


class C2CExplainer(Explainer):
    method_id = METHOD_ID
    family = "counterfactual_guided"
    Params = C2CParams

    def __init__(self, ctx: ExplainContext, params=None) -> None:
        super().__init__(ctx, params)
        p = self.params
        self.vae = train_vae(
            ctx.train,
            epochs=p.vae_epochs,
            latent_dim=p.latent_dim,
            learning_rate=p.learning_rate,
            seed=ctx.seed,
            hidden=p.hidden,
        )
        self.c2c = train_c2c(
            self.vae,
            ctx.train,
            pair_budget=p.pair_budget,
            epochs=p.c2c_epochs,
            seed=ctx.seed + 1,
            latent_dim=p.c2c_latent_dim,
            learning_rate=p.learning_rate,
            hidden=p.hidden,
        )

    def explain(self, q: np.ndarray, query_id: int = 0, seed: int = 0) -> List[SemiFactual]:
        p = self.params
        return [c2c_sf(q, self.ctx, self.vae, self.c2c, p.lam, p.halvings, p.n_samples, seed=seed, query_id=query_id)]
