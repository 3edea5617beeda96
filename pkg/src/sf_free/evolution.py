from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Sequence

import numpy as np


BatchLoss = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SearchBlock:
    """A group of columns mutated together: one continuous column or one one-hot block."""

    columns: slice
    categorical: bool = False


@dataclass
class EvolutionResult:
    best: np.ndarray
    best_loss: float
    initial_best_loss: float
    evaluations: int
    history: List[float] = field(default_factory=list)


def _mutate(
    parent: np.ndarray,
    x0: np.ndarray,
    blocks: Sequence[SearchBlock],
    sigma: float,
    lower: np.ndarray,
    upper: np.ndarray,
    reset_prob: float,
    rng: np.random.Generator,
) -> np.ndarray:
    child = parent.copy()
    block = blocks[int(rng.integers(len(blocks)))]
    cols = block.columns
    if rng.random() < reset_prob:
        child[cols] = x0[cols]
    elif block.categorical:
        width = cols.stop - cols.start
        child[cols] = 0.0
        child[cols.start + int(rng.integers(width))] = 1.0
    else:
        child[cols] = np.clip(child[cols] + rng.normal(0.0, sigma, cols.stop - cols.start), lower[cols], upper[cols])
    return child


def evolve(
    loss_fn: BatchLoss,
    x0: np.ndarray,
    blocks: Sequence[SearchBlock],
    rng: np.random.Generator,
    budget: int = 2000,
    population: int = 20,
    offspring: int = 40,
    sigma: float = 0.1,
    lower: np.ndarray = None,
    upper: np.ndarray = None,
    reset_prob: float = 0.2,
) -> EvolutionResult:
    """Elitist (mu + lambda) evolution strategy minimising a batched loss.

    The initial population is x0 plus single-block mutations of it. Each child
    mutates one block of one parent (or resets it to x0). Step size follows
    the one-fifth success rule. Non-finite losses mark infeasible points.
    """
    x0 = np.asarray(x0, dtype=float)
    lower = np.full_like(x0, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full_like(x0, np.inf) if upper is None else np.asarray(upper, dtype=float)
    if not blocks:
        loss = float(loss_fn(x0[None, :])[0])
        return EvolutionResult(best=x0.copy(), best_loss=loss, initial_best_loss=loss, evaluations=1, history=[loss])

    size = max(1, min(population, budget))
    pop = [x0.copy()] + [_mutate(x0, x0, blocks, sigma, lower, upper, 0.0, rng) for _ in range(size - 1)]
    P = np.stack(pop)
    L = np.asarray(loss_fn(P), dtype=float)
    L = np.where(np.isnan(L), np.inf, L)
    evals = P.shape[0]
    order = np.argsort(L, kind="stable")
    P, L = P[order], L[order]
    initial_best = float(L[0])
    history = [initial_best]

    while evals < budget:
        n_child = min(offspring, budget - evals)
        parents = rng.integers(P.shape[0], size=n_child)
        C = np.stack([_mutate(P[p], x0, blocks, sigma, lower, upper, reset_prob, rng) for p in parents])
        LC = np.asarray(loss_fn(C), dtype=float)
        LC = np.where(np.isnan(LC), np.inf, LC)
        evals += n_child
        success = float(np.mean(LC < L[0])) if np.isfinite(L[0]) else float(np.mean(np.isfinite(LC)))
        sigma = float(np.clip(sigma * (1.22 if success > 0.2 else 0.82), 1e-3, 0.5))
        allP = np.concatenate([P, C])
        allL = np.concatenate([L, LC])
        keep = np.argsort(allL, kind="stable")[:size]
        P, L = allP[keep], allL[keep]
        history.append(float(L[0]))

    return EvolutionResult(best=P[0].copy(), best_loss=float(L[0]), initial_best_loss=initial_best, evaluations=evals, history=history)


def feature_blocks(space, features: Sequence[int]) -> List[SearchBlock]:
    return [SearchBlock(columns=space.slices[i], categorical=space.is_categorical(i)) for i in features]


def unit_bounds(x0: np.ndarray) -> tuple:
    """Scaled-space box [0, 1], widened to contain x0."""
    x0 = np.asarray(x0, dtype=float)
    return np.minimum(0.0, x0), np.maximum(1.0, x0)
