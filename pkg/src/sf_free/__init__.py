"""Counterfactual-free semi-factual methods: Local-Region, DSER, MDN and S-GEN."""

from .dser import DserConfig, DserExplainer, dser_loss, dser_sf
from .local_region import LocalRegionExplainer, LocalRegionParams, local_region_sf
from .mdn import MdnExplainer, MdnParams, mdn_sf
from .scm import BoundSCM, Equation, SCMError, SCMSpec, bind_scm, load_scm, parse_scm
from .sgen import SgenConfig, SgenExplainer, diversity, sgen_gain, sgen_sf

__all__ = [
    "BoundSCM",
    "DserConfig",
    "DserExplainer",
    "Equation",
    "LocalRegionExplainer",
    "LocalRegionParams",
    "MdnExplainer",
    "MdnParams",
    "SCMError",
    "SCMSpec",
    "SgenConfig",
    "SgenExplainer",
    "bind_scm",
    "diversity",
    "dser_loss",
    "dser_sf",
    "load_scm",
    "local_region_sf",
    "mdn_sf",
    "parse_scm",
    "sgen_gain",
    "sgen_sf",
]
