from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .errors import ModelError
from .neighbors import rank_by_distance


logger = logging.getLogger("model")


@dataclass(frozen=True)
class LocalSurrogate:
    """Logistic model of P(query class | x) fitted on a local region."""

    weights: np.ndarray
    bias: float

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return expit(X @ self.weights + self.bias)


def logistic_loss_and_grad(params: np.ndarray, X: np.ndarray, t: np.ndarray, l2: float = 1e-3) -> Tuple[float, np.ndarray]:
    """Mean log-loss (+ L2 on weights) and its analytic gradient.

    params = [w_1..w_d, b]; t holds 0/1 targets.
    """
    w, b = params[:-1], params[-1]
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - t * z) + 0.5 * l2 * (w @ w))
    r = expit(z) - t
    grad = np.empty_like(params)
    grad[:-1] = X.T @ r / X.shape[0] + l2 * w
    grad[-1] = float(np.mean(r))
    return loss, grad


def fit_local_surrogate(X: np.ndarray, t: np.ndarray, seed: int = 0, l2: float = 1e-3, max_iter: int = 500) -> LocalSurrogate:
    """Fit the local logistic surrogate by gradient-based minimisation (L-BFGS)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    t = np.asarray(t, dtype=float)
    if np.unique(t).size < 2:
        raise ModelError("local surrogate needs a region with both classes")
    rng = np.random.default_rng(seed)
    x0 = np.concatenate([rng.normal(0.0, 0.01, X.shape[1]), [0.0]])
    res = minimize(
        logistic_loss_and_grad,
        x0,
        args=(X, t, l2),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter},
    )
    if not res.success:
        logger.debug("Surrogate optimiser stopped early", extra={"message": str(res.message)})
    return LocalSurrogate(weights=res.x[:-1].copy(), bias=float(res.x[-1]))


def log_loss(p: np.ndarray, t: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1 - 1e-12)
    return float(-np.mean(t * np.log(p) + (1 - t) * np.log(1 - p)))


def local_region(q: np.ndarray, X: np.ndarray, in_class: np.ndarray, min_per_class: int = 200) -> np.ndarray:
    """Indices of the region around q: the min_per_class nearest query-class
    members plus the min_per_class nearest other-class members.

    Taking the nearest members of each side pads a sparse neighbourhood with
    the next closest instances; a side with fewer members contributes all of them.
    """
    in_class = np.asarray(in_class, dtype=bool)
    if not in_class.any() or in_class.all():
        raise ModelError("local region needs query-class and other-class instances")
    dist = np.linalg.norm(X - q[None, :], axis=1)
    picked = []
    for side in (in_class, ~in_class):
        idx = np.flatnonzero(side)
        order = idx[rank_by_distance(dist[idx])]
        if order.size < min_per_class:
            logger.debug("Local region side below target size", extra={"available": int(order.size), "target": min_per_class})
        picked.append(order[:min_per_class])
    return np.sort(np.concatenate(picked))
