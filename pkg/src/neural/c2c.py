from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from src.data import Dataset

from .vae import VAEModel, fit_vae


logger = logging.getLogger("neural")


def class_pair(n_classes: int, source: int, target: int) -> np.ndarray:
    """One-hot source class followed by one-hot target class."""
    v = np.zeros(2 * n_classes)
    v[source] = 1.0
    v[n_classes + target] = 1.0
    return v


@dataclass
class C2CModel:
    """Conditional autoencoder over latent differences f(s) - f(t) given <C_s, C_t>."""

    net: VAEModel
    n_classes: int
    heldout_mse: float
    delta_variance: float

    def decode(self, code: np.ndarray, source: int, target: int) -> np.ndarray:
        return self.net.decode(code, class_pair(self.n_classes, source, target))


@dataclass(frozen=True)
class Guide:
    instance: np.ndarray
    latent: np.ndarray
    mse: float


def sample_pairs(y: np.ndarray, n_classes: int, pair_budget: int, rng: np.random.Generator):
    """Cross-class (s, t) index pairs spread over every ordered class pair."""
    members = [np.flatnonzero(y == c) for c in range(n_classes)]
    ordered = [(a, b) for a in range(n_classes) for b in range(n_classes) if a != b and members[a].size and members[b].size]
    if not ordered:
        raise ValueError("C2C training needs at least 2 populated classes")
    per = max(1, pair_budget // len(ordered))
    s_idx, t_idx, cs, ct = [], [], [], []
    for a, b in ordered:
        s_idx.append(rng.choice(members[a], per))
        t_idx.append(rng.choice(members[b], per))
        cs.append(np.full(per, a))
        ct.append(np.full(per, b))
    return np.concatenate(s_idx), np.concatenate(t_idx), np.concatenate(cs), np.concatenate(ct)


def train_c2c(
    vae: VAEModel,
    train: Union[Dataset, np.ndarray],
    y: np.ndarray = None,
    pair_budget: int = 2000,
    epochs: int = 100,
    seed: int = 0,
    latent_dim: int = 4,
    learning_rate: float = 1e-3,
    hidden: Sequence[int] = (32, 32),
    holdout: float = 0.2,
) -> C2CModel:
    if isinstance(train, Dataset):
        X, y, n_classes = train.X, train.y, len(train.classes)
    else:
        X = np.asarray(train, dtype=float)
        n_classes = int(np.max(y)) + 1
    y = np.asarray(y, dtype=int)
    if np.unique(y).size < 2:
        raise ValueError("C2C training needs at least 2 classes")
    rng = np.random.default_rng(seed)
    s, t, cs, ct = sample_pairs(y, n_classes, pair_budget, rng)
    latents = vae.encode_mean(X)
    delta = latents[s] - latents[t]
    cond = np.stack([class_pair(n_classes, a, b) for a, b in zip(cs, ct)])

    order = rng.permutation(delta.shape[0])
    n_hold = int(round(holdout * order.size))
    hold, fit_idx = order[:n_hold], order[n_hold:]
    net = VAEModel.create(delta.shape[1], latent_dim, rng, hidden=hidden, cond_dim=cond.shape[1])
    fit_vae(net, delta[fit_idx], epochs, learning_rate, rng, cond=cond[fit_idx])

    if n_hold:
        ho_mse = net.reconstruction_mse(delta[hold], cond[hold])
        variance = float(np.mean(np.var(delta[hold], axis=0)))
    else:
        ho_mse = net.history[-1]
        variance = float(np.mean(np.var(delta, axis=0)))
    if ho_mse >= variance:
        logger.warning("C2C does not beat the mean predictor", extra={"heldout_mse": ho_mse, "variance": variance})
    logger.info("C2C trained", extra={"pairs": int(delta.shape[0]), "heldout_mse": round(ho_mse, 6), "variance": round(variance, 6)})
    return C2CModel(net=net, n_classes=n_classes, heldout_mse=ho_mse, delta_variance=variance)


def sample_guide(
    c2c: C2CModel,
    vae: VAEModel,
    q: np.ndarray,
    query_class: int,
    target_class: int,
    n_samples: int = 100,
    seed: int = 0,
) -> Guide:
    """Sample codes from the prior, decode them to latent differences for the
    (query, target) class pair, map back to data space and keep the decode
    closest (MSE) to q."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    codes = rng.standard_normal((n_samples, c2c.net.latent_dim))
    deltas = c2c.decode(codes, query_class, target_class)
    z_q = vae.encode_mean(q)[0]
    z_t = z_q[None, :] - deltas
    candidates = vae.decode(z_t)
    mse = np.mean((candidates - np.asarray(q)[None, :]) ** 2, axis=1)
    best = int(np.argmin(mse))
    return Guide(instance=candidates[best], latent=z_t[best], mse=float(mse[best]))
