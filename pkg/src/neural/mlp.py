from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np


class Activation(str, Enum):
    RELU = "relu"
    TANH = "tanh"
    IDENTITY = "identity"


def _act(kind: Activation, z: np.ndarray) -> np.ndarray:
    if kind == Activation.RELU:
        return np.maximum(z, 0.0)
    if kind == Activation.TANH:
        return np.tanh(z)
    return z


def _act_grad(kind: Activation, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if kind == Activation.RELU:
        return (z > 0.0).astype(z.dtype)
    if kind == Activation.TANH:
        return 1.0 - a * a
    return np.ones_like(z)


@dataclass
class Dense:
    W: np.ndarray
    b: np.ndarray
    activation: Activation


@dataclass
class ForwardCache:
    inputs: List[np.ndarray] = field(default_factory=list)
    pre: List[np.ndarray] = field(default_factory=list)
    post: List[np.ndarray] = field(default_factory=list)


@dataclass
class MLP:
    """Feed-forward stack of dense layers with manual backpropagation."""

    layers: List[Dense]

    @classmethod
    def create(cls, sizes: Sequence[int], hidden: Activation, output: Activation, rng: np.random.Generator) -> "MLP":
        layers = []
        for i in range(len(sizes) - 1):
            fan_in, fan_out = sizes[i], sizes[i + 1]
            is_last = i == len(sizes) - 2
            act = output if is_last else hidden
            # He init for relu, Glorot otherwise
            scale = np.sqrt(2.0 / fan_in) if act == Activation.RELU else np.sqrt(1.0 / fan_in)
            layers.append(Dense(W=rng.normal(0.0, scale, (fan_in, fan_out)), b=np.zeros(fan_out), activation=act))
        return cls(layers=layers)

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
        cache = ForwardCache()
        a = np.atleast_2d(x)
        for layer in self.layers:
            cache.inputs.append(a)
            z = a @ layer.W + layer.b
            a = _act(layer.activation, z)
            cache.pre.append(z)
            cache.post.append(a)
        return a, cache

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache: ForwardCache, grad_out: np.ndarray) -> Tuple[List[np.ndarray], np.ndarray]:
        """Gradients w.r.t. [W0, b0, W1, b1, ...] and w.r.t. the input."""
        grads: List[np.ndarray] = [None] * (2 * len(self.layers))  # type: ignore[list-item]
        g = grad_out
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            g = g * _act_grad(layer.activation, cache.pre[i], cache.post[i])
            grads[2 * i] = cache.inputs[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ layer.W.T
        return grads, g

    def params(self) -> List[np.ndarray]:
        out: List[np.ndarray] = []
        for layer in self.layers:
            out.extend([layer.W, layer.b])
        return out

    def copy(self) -> "MLP":
        return MLP(layers=[Dense(W=l.W.copy(), b=l.b.copy(), activation=l.activation) for l in self.layers])


class Adam:
    """Adam updates applied in place to a list of parameter arrays."""

    def __init__(self, params: List[np.ndarray], lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: List[np.ndarray]) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)
