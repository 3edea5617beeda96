from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.data import Dataset

from .mlp import MLP, Activation, Adam


logger = logging.getLogger("neural")


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, what: str = "loss") -> None:
        super().__init__(f"{what} became non-finite at epoch {epoch}")
        self.epoch = epoch


def kl_standard_normal(mu: np.ndarray, logvar: np.ndarray) -> np.ndarray:
    """KL(N(mu, exp(logvar)) || N(0, I)) per row."""
    return -0.5 * np.sum(1.0 + logvar - mu * mu - np.exp(logvar), axis=-1)


def _with_cond(x: np.ndarray, cond: Optional[np.ndarray]) -> np.ndarray:
    x = np.atleast_2d(x)
    if cond is None:
        return x
    c = np.atleast_2d(cond)
    if c.shape[0] == 1 and x.shape[0] > 1:
        c = np.repeat(c, x.shape[0], axis=0)
    return np.concatenate([x, c], axis=1)


@dataclass
class VAEModel:
    """Encoder f -> (mean, log-variance), decoder f' from latent to data space.

    With cond_dim > 0 both networks also receive a condition vector.
    """

    encoder: MLP
    decoder: MLP
    latent_dim: int
    x_dim: int
    cond_dim: int = 0
    kl_weight: float = 1.0
    history: List[float] = field(default_factory=list)

    @classmethod
    def create(
        cls,
        x_dim: int,
        latent_dim: int,
        rng: np.random.Generator,
        hidden: Sequence[int] = (32, 32),
        cond_dim: int = 0,
        kl_weight: float = 1.0,
    ) -> "VAEModel":
        enc = MLP.create([x_dim + cond_dim, *hidden, 2 * latent_dim], Activation.RELU, Activation.IDENTITY, rng)
        dec = MLP.create([latent_dim + cond_dim, *hidden, x_dim], Activation.RELU, Activation.IDENTITY, rng)
        return cls(encoder=enc, decoder=dec, latent_dim=latent_dim, x_dim=x_dim, cond_dim=cond_dim, kl_weight=kl_weight)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.x_dim:
            raise ValueError(f"expected {self.x_dim} features, got {x.shape[1]}")
        return x

    def encode(self, x: np.ndarray, cond: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        h = self.encoder.predict(_with_cond(self._check(x), cond))
        return h[:, : self.latent_dim], h[:, self.latent_dim :]

    def encode_mean(self, x: np.ndarray, cond: Optional[np.ndarray] = None) -> np.ndarray:
        return self.encode(x, cond)[0]

    def decode(self, z: np.ndarray, cond: Optional[np.ndarray] = None) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if z.shape[1] != self.latent_dim:
            raise ValueError(f"expected latent of size {self.latent_dim}, got {z.shape[1]}")
        return self.decoder.predict(_with_cond(z, cond))

    def reconstruction_mse(self, X: np.ndarray, cond: Optional[np.ndarray] = None) -> float:
        X = self._check(X)
        return float(np.mean((self.decode(self.encode_mean(X, cond), cond) - X) ** 2))

    def loss_and_grads(
        self, x: np.ndarray, eps: np.ndarray, cond: Optional[np.ndarray] = None
    ) -> Tuple[float, List[np.ndarray]]:
        """Batch loss mean(sum sq. error + kl_weight * KL) and gradients for
        encoder params followed by decoder params (reparameterised z = mu + std*eps)."""
        x = self._check(x)
        B = x.shape[0]
        h, enc_cache = self.encoder.forward(_with_cond(x, cond))
        mu, logvar = h[:, : self.latent_dim], h[:, self.latent_dim :]
        std = np.exp(0.5 * logvar)
        z = mu + std * eps
        xhat, dec_cache = self.decoder.forward(_with_cond(z, cond))
        rec = np.sum((xhat - x) ** 2, axis=1)
        kl = kl_standard_normal(mu, logvar)
        loss = float(np.mean(rec + self.kl_weight * kl))

        dec_grads, g_in = self.decoder.backward(dec_cache, 2.0 * (xhat - x) / B)
        dz = g_in[:, : self.latent_dim]
        dmu = dz + self.kl_weight * mu / B
        dlogvar = dz * eps * 0.5 * std + self.kl_weight * 0.5 * (np.exp(logvar) - 1.0) / B
        enc_grads, _ = self.encoder.backward(enc_cache, np.concatenate([dmu, dlogvar], axis=1))
        return loss, enc_grads + dec_grads

    def params(self) -> List[np.ndarray]:
        return self.encoder.params() + self.decoder.params()


def fit_vae(
    model: VAEModel,
    X: np.ndarray,
    epochs: int,
    learning_rate: float,
    rng: np.random.Generator,
    batch_size: int = 32,
    cond: Optional[np.ndarray] = None,
) -> VAEModel:
    """Minibatch Adam training; model.history holds deterministic
    reconstruction MSE before training and after every epoch."""
    X = model._check(X)
    n = X.shape[0]
    opt = Adam(model.params(), lr=learning_rate)
    model.history = [model.reconstruction_mse(X, cond)]
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            eps = rng.standard_normal((idx.size, model.latent_dim))
            c = cond[idx] if cond is not None else None
            loss, grads = model.loss_and_grads(X[idx], eps, c)
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
                raise TrainingDiverged(epoch)
            opt.step(grads)
        mse = model.reconstruction_mse(X, cond)
        if not np.isfinite(mse):
            raise TrainingDiverged(epoch, "reconstruction error")
        model.history.append(mse)
        if epoch % 25 == 0 or epoch == epochs:
            logger.debug("VAE epoch", extra={"epoch": epoch, "recon_mse": round(mse, 6)})
    return model


def train_vae(
    train: Union[Dataset, np.ndarray],
    epochs: int = 200,
    latent_dim: int = 4,
    learning_rate: float = 1e-3,
    seed: int = 0,
    hidden: Sequence[int] = (32, 32),
    batch_size: int = 32,
    kl_weight: float = 1.0,
) -> VAEModel:
    X = train.X if isinstance(train, Dataset) else np.asarray(train, dtype=float)
    rng = np.random.default_rng(seed)
    model = VAEModel.create(X.shape[1], latent_dim, rng, hidden=hidden, kl_weight=kl_weight)
    fit_vae(model, X, epochs, learning_rate, rng, batch_size=batch_size)
    logger.info(
        "VAE trained",
        extra={"epochs": epochs, "latent_dim": latent_dim, "mse_start": round(model.history[0], 6), "mse_end": round(model.history[-1], 6)},
    )
    return model


def vae_codec(model: VAEModel, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(posterior mean, decoder(posterior mean)) for one instance."""
    z = model.encode_mean(x)
    return z[0], model.decode(z)[0]


def interpolate(model: VAEModel, z_q: np.ndarray, z_t: np.ndarray, lam: float) -> Tuple[np.ndarray, np.ndarray]:
    """Decode (1 - lam) * z_q + lam * z_t; returns (latent, decoded instance)."""
    z = (1.0 - lam) * np.asarray(z_q) + lam * np.asarray(z_t)
    return z, model.decode(z)[0]
