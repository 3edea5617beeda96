import math

import numpy as np
import pytest
from scipy import integrate

from src.bench.fixtures import builtin_dataset
from src.model import (
    ForestClassifier,
    GammaParams,
    ModelError,
    build_index,
    fit_classifier,
    fit_gamma,
    fit_local_surrogate,
    fit_reject_score,
    gamma_cdf,
    knn,
    logistic_loss_and_grad,
    reject_score,
    sample_ball,
    tail_probability,
)
from src.model.surrogate import log_loss


def test_forest_accuracy_and_probabilities(gaussian_dataset):
    clf = fit_classifier(gaussian_dataset, n_trees=30, seed=0)
    acc = float(np.mean(clf.predict(gaussian_dataset.X) == gaussian_dataset.y))
    assert acc >= 0.95
    proba = clf.predict_proba(gaussian_dataset.X[:20])
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-12)


def test_forest_determinism_and_persistence(tmp_path, gaussian_dataset):
    a = fit_classifier(gaussian_dataset, n_trees=10, seed=4)
    b = fit_classifier(gaussian_dataset, n_trees=10, seed=4)
    probe = gaussian_dataset.X[::7]
    np.testing.assert_array_equal(a.predict_proba(probe), b.predict_proba(probe))
    path = str(tmp_path / "forest.joblib")
    a.save(path)
    loaded = ForestClassifier.load(path)
    np.testing.assert_array_equal(loaded.predict_proba(probe), a.predict_proba(probe))


def test_forest_single_class_rejected():
    ds, _ = builtin_dataset("two_gaussian", n=40, seed=0)
    single = ds.subset(np.flatnonzero(ds.y == 0))
    with pytest.raises(ModelError):
        fit_classifier(single, n_trees=5)


def test_knn_examples():
    index = build_index(np.array([[0.0], [1.0], [3.0]]))
    idx, dist = knn(index, np.array([0.9]), 2)
    assert idx.tolist() == [1, 0]
    np.testing.assert_allclose(dist, [0.1, 0.9])
    idx, dist = knn(index, np.array([3.0]), 1)
    assert idx.tolist() == [2] and dist[0] == 0.0
    # tie at 0.5 -> lower index first
    idx, _ = knn(build_index(np.array([[0.0], [1.0]])), np.array([0.5]), 2)
    assert idx.tolist() == [0, 1]
    with pytest.raises(ModelError):
        knn(index, np.array([0.0]), 4)


def test_sample_ball_stays_inside_radius():
    rng = np.random.default_rng(0)
    center = np.array([0.5, 0.5, 1.0])
    pts = sample_ball(rng, center, 0.1, 200, np.array([0, 1]))
    assert np.all(np.linalg.norm(pts - center, axis=1) <= 0.1 + 1e-12)
    assert np.all(pts[:, 2] == 1.0)


def test_surrogate_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(30, 3))
    t = (X[:, 0] > 0).astype(float)
    params = rng.normal(size=4)
    _, grad = logistic_loss_and_grad(params, X, t, l2=0.01)
    h = 1e-6
    for i in range(params.size):
        e = np.zeros_like(params)
        e[i] = h
        num = (logistic_loss_and_grad(params + e, X, t, 0.01)[0] - logistic_loss_and_grad(params - e, X, t, 0.01)[0]) / (2 * h)
        assert grad[i] == pytest.approx(num, rel=1e-5, abs=1e-8)


def test_surrogate_separable_and_uninformative():
    X = np.linspace(0.0, 1.0, 40)[:, None]
    t = (X[:, 0] > 0.5).astype(float)
    s = fit_local_surrogate(X, t, seed=0)
    assert s.predict_proba(np.array([[0.9]]))[0] > 0.5
    assert s.predict_proba(np.array([[0.1]]))[0] < 0.5
    assert log_loss(s.predict_proba(X), t) < math.log(2)

    # symmetric, label-independent region
    Xs = np.array([[0.0], [1.0], [0.0], [1.0]])
    ts = np.array([0.0, 0.0, 1.0, 1.0])
    p = fit_local_surrogate(Xs, ts, seed=0).predict_proba(Xs)
    np.testing.assert_allclose(p, 0.5, atol=0.1)

    with pytest.raises(ModelError):
        fit_local_surrogate(X, np.ones(40))


def test_reject_score_examples():
    X = np.array([[0.0], [0.1], [0.2], [0.3], [5.0]])
    y = np.array([0, 0, 1, 1, 0])
    rs = fit_reject_score(X, y, k=4, threshold=0.25)
    assert reject_score(rs, np.array([0.15])) == pytest.approx(0.5)
    rs2 = fit_reject_score(np.array([[0.0], [0.1], [0.2], [9.0]]), np.array([1, 1, 1, 0]), k=3, threshold=0.5)
    assert reject_score(rs2, np.array([0.1])) == 0.0
    with pytest.raises(ModelError):
        reject_score(None, np.array([0.0]))


def test_reject_threshold_grid_search(gaussian_dataset):
    rs = fit_reject_score(gaussian_dataset.X, gaussian_dataset.y, k=5, seed=0)
    assert rs.threshold in {j / 5 for j in range(6)}
    assert len(rs.grid) == 6
    assert max(rs.grid.values()) == rs.grid[f"{rs.threshold:.6f}"]


def test_gamma_moments():
    # mean 2, population variance 2
    p = fit_gamma([2.0 - math.sqrt(2.0), 2.0 + math.sqrt(2.0)])
    assert p.shape == pytest.approx(2.0)
    assert p.scale == pytest.approx(1.0)
    assert p.mean == pytest.approx(2.0)
    # mean 1, variance 1: exponential
    a = 1.0 - 1.0 / math.sqrt(2.0)
    p = fit_gamma([a, a, 3.0 - 2.0 * a])
    assert (p.shape, p.scale) == pytest.approx((1.0, 1.0))
    assert fit_gamma([3.0, 3.0, 3.0]).degenerate
    with pytest.raises(ModelError):
        fit_gamma([1.0])


def test_gamma_cdf_examples():
    assert gamma_cdf(fit_gamma([0.5, 1.5]), 0.0) == 0.0
    p = fit_gamma([2.0 - math.sqrt(2.0), 2.0 + math.sqrt(2.0)])
    xs = np.linspace(0.0, 8.0, 17)
    cdf = [gamma_cdf(p, float(x)) for x in xs]
    assert all(a <= b for a, b in zip(cdf, cdf[1:]))
    unit = GammaParams(shape=1.0, scale=1.0)
    assert gamma_cdf(unit, math.log(2.0)) == pytest.approx(0.5)
    assert tail_probability(unit, math.log(2.0)) == pytest.approx(0.5)


@pytest.mark.parametrize("samples", [[0.2, 0.9, 1.4, 2.5, 3.1], [-0.5, 0.3, 1.0, 1.8]])
def test_gamma_cdf_matches_numeric_integration(samples):
    p = fit_gamma(samples)
    assert not p.degenerate and p.shape > 1.0

    def pdf(z):
        return z ** (p.shape - 1.0) * math.exp(-z / p.scale) / (math.gamma(p.shape) * p.scale**p.shape)

    for x in np.linspace(min(samples), max(samples) + 2.0, 9):
        upper = float(x) + p.offset
        expected = integrate.quad(pdf, 0.0, upper)[0] if upper > 0.0 else 0.0
        assert abs(gamma_cdf(p, float(x)) - expected) < 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_knn_matches_exhaustive_search(seed):
    rng = np.random.default_rng(seed)
    points = rng.random((50, 3))
    index = build_index(points)
    for _ in range(5):
        q = rng.random(3)
        k = int(rng.integers(1, 51))
        idx, dist = knn(index, q, k)
        exhaustive = sorted(range(50), key=lambda j: (math.dist(points[j], q), j))[:k]
        assert idx.tolist() == exhaustive
        np.testing.assert_allclose(dist, [math.dist(points[j], q) for j in exhaustive], rtol=1e-12)
