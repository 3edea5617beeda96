"""Counterfactual-guided semi-factual methods: KLEOR, tabular PIECE, C2C-VAE and DiCE-SF."""

from .c2c_vae import C2CExplainer, C2CParams, c2c_sf
from .dice import DiceConfig, DiceExplainer, dice_loss, dice_sf, dpp_diversity
from .kleor import KleorExplainer, KleorParams, kleor_sf, similarity
from .nun import Nun, find_nun
from .piece import PieceConfig, PieceExplainer, exceptional_features, fit_class_gammas, piece_tabular_sf

__all__ = [
    "C2CExplainer",
    "C2CParams",
    "DiceConfig",
    "DiceExplainer",
    "KleorExplainer",
    "KleorParams",
    "Nun",
    "PieceConfig",
    "PieceExplainer",
    "c2c_sf",
    "dice_loss",
    "dice_sf",
    "dpp_diversity",
    "exceptional_features",
    "find_nun",
    "fit_class_gammas",
    "kleor_sf",
    "piece_tabular_sf",
    "similarity",
]
