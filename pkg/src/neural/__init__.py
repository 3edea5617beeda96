"""Small numpy feed-forward stack: MLP with manual backprop, VAE and the class-to-class difference model."""

from .c2c import C2CModel, Guide, class_pair, sample_guide, train_c2c
from .mlp import MLP, Activation, Adam
from .vae import TrainingDiverged, VAEModel, interpolate, kl_standard_normal, train_vae, vae_codec

__all__ = [
    "Activation",
    "Adam",
    "C2CModel",
    "Guide",
    "MLP",
    "TrainingDiverged",
    "VAEModel",
    "class_pair",
    "interpolate",
    "kl_standard_normal",
    "sample_guide",
    "train_c2c",
    "train_vae",
    "vae_codec",
]
