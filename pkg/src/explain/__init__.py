"""Uniform explain(query) contract shared by every semi-factual method."""

from .interfaces import SAMENESS_THRESHOLD, ExplainContext, Explainer, ExplanationFailure, SemiFactual, parse_params
from .registry import COUNTERFACTUAL_FREE, COUNTERFACTUAL_GUIDED, METHOD_IDS, create, default_params, family_of

__all__ = [
    "COUNTERFACTUAL_FREE",
    "COUNTERFACTUAL_GUIDED",
    "METHOD_IDS",
    "SAMENESS_THRESHOLD",
    "ExplainContext",
    "Explainer",
    "ExplanationFailure",
    "SemiFactual",
    "create",
    "default_params",
    "family_of",
    "parse_params",
]
