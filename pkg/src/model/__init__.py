"""Classical learned components: forest, k-NN, local surrogate, reject score, gamma models."""

from .errors import ModelError
from .forest import ForestClassifier, fit_classifier
from .gamma import GammaParams, fit_gamma, gamma_cdf, tail_probability
from .neighbors import NeighborIndex, build_index, knn, rank_by_distance, sample_ball
from .reject import RejectScore, fit_reject_score, reject_score
from .surrogate import LocalSurrogate, fit_local_surrogate, local_region, logistic_loss_and_grad

__all__ = [
    "ForestClassifier",
    "GammaParams",
    "LocalSurrogate",
    "ModelError",
    "NeighborIndex",
    "RejectScore",
    "build_index",
    "fit_classifier",
    "fit_gamma",
    "fit_local_surrogate",
    "fit_reject_score",
    "gamma_cdf",
    "knn",
    "local_region",
    "logistic_loss_and_grad",
    "rank_by_distance",
    "reject_score",
    "sample_ball",
    "tail_probability",
]
