from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import ModelError


# Shift applied on top of -min when samples touch zero, so support stays positive
SUPPORT_MARGIN = 1e-3


@dataclass(frozen=True)
class GammaParams:
    """Method-of-moments gamma fit. Samples are modelled as (value + offset)."""

    shape: float
    scale: float
    offset: float = 0.0
    degenerate: bool = False
    constant: float = 0.0

    @property
    def mean(self) -> float:
        """Expected value in the original (unshifted) space."""
        if self.degenerate:
            return self.constant
        return self.shape * self.scale - self.offset


def fit_gamma(samples: Sequence[float]) -> GammaParams:
    """shape = mean^2/variance, scale = variance/mean on offset-shifted samples."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ModelError("gamma fit needs at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise ModelError("gamma fit needs finite samples")
    var = float(np.var(x))
    if var <= 0.0:
        return GammaParams(shape=1.0, scale=1.0, degenerate=True, constant=float(x[0]))
    lo = float(np.min(x))
    offset = 0.0 if lo > 0 else SUPPORT_MARGIN - lo
    mean = float(np.mean(x)) + offset
    return GammaParams(shape=mean * mean / var, scale=var / mean, offset=offset)


def gamma_cdf(params: GammaParams, x: float) -> float:
    """P(X <= x) in the original space (offset applied internally).

    Degenerate fits are a step at the constant value.
    """
    if params.degenerate:
        return 1.0 if x >= params.constant else 0.0
    z = x + params.offset
    if z <= 0.0:
        return 0.0
    return float(stats.gamma.cdf(z, a=params.shape, scale=params.scale))


def tail_probability(params: GammaParams, x: float) -> float:
    """Two-sided tail mass min(CDF, 1 - CDF); degenerate fits are never exceptional."""
    if params.degenerate:
        return 0.5
    c = gamma_cdf(params, x)
    return min(c, 1.0 - c)
