from __future__ import annotations

from typing import Any, Dict, Mapping, Optional, Type

from .interfaces import ExplainContext, Explainer


COUNTERFACTUAL_FREE = ("local_region", "dser", "mdn", "sgen")
COUNTERFACTUAL_GUIDED = ("kleor", "piece", "c2c_vae", "dice")
METHOD_IDS = COUNTERFACTUAL_FREE + COUNTERFACTUAL_GUIDED

COUNTERFACTUAL_FREE_FAMILY = "counterfactual_free"
COUNTERFACTUAL_GUIDED_FAMILY = "counterfactual_guided"


def _load_explainer(key: str) -> Type[Explainer]:
    """Return the explainer class for a method id using lazy imports.

    Lazy loading keeps the neural stack out of runs that never configure C2C-VAE.
    """
    k = key.lower()
    if k == "local_region":
        from src.sf_free.local_region import LocalRegionExplainer  # local import

        return LocalRegionExplainer
    if k == "dser":
        from src.sf_free.dser import DserExplainer  # local import

        return DserExplainer
    if k == "mdn":
        from src.sf_free.mdn import MdnExplainer  # local import

        return MdnExplainer
    if k == "sgen":
        from src.sf_free.sgen import SgenExplainer  # local import

        return SgenExplainer
    if k == "kleor":
        from src.sf_guided.kleor import KleorExplainer  # local import

        return KleorExplainer
    if k == "piece":
        from src.sf_guided.piece import PieceExplainer  # local import

        return PieceExplainer
    if k == "c2c_vae":
        from src.sf_guided.c2c_vae import C2CExplainer  # local import

        return C2CExplainer
    if k == "dice":
        from src.sf_guided.dice import DiceExplainer  # local import

        return DiceExplainer
    raise ValueError(f"Unknown semi-factual method '{key}'")


def family_of(method_id: str) -> str:
    if method_id in COUNTERFACTUAL_FREE:
        return COUNTERFACTUAL_FREE_FAMILY
    if method_id in COUNTERFACTUAL_GUIDED:
        return COUNTERFACTUAL_GUIDED_FAMILY
    raise ValueError(f"Unknown semi-factual method '{method_id}'")


def params_model(method_id: str):
    """Pydantic parameter model of a method (used for config validation)."""
    return _load_explainer(method_id).Params


def create(method_id: str, ctx: ExplainContext, params: Optional[Mapping[str, Any]] = None) -> Explainer:
    """Fit a method on the fold context.

    Known ids: local_region, dser, mdn, sgen, kleor, piece, c2c_vae, dice
    """
    cls = _load_explainer(method_id)
    return cls(ctx, params)


def default_params(method_id: str) -> Dict[str, Any]:
    model = params_model(method_id)()
    return model.model_dump()
