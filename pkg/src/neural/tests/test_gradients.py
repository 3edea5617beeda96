import numpy as np
import pytest

from src.neural import (
    MLP,
    Activation,
    TrainingDiverged,
    VAEModel,
    interpolate,
    kl_standard_normal,
    sample_guide,
    train_c2c,
    train_vae,
    vae_codec,
)
from src.neural.c2c import sample_pairs


def _blobs(n=120, seed=0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    X = np.clip(0.3 + 0.4 * y[:, None] + 0.08 * rng.standard_normal((n, 3)), 0.0, 1.0)
    return X, y


def _relative_error(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


@pytest.mark.parametrize("hidden", [Activation.TANH, Activation.RELU])
def test_mlp_gradients_match_finite_differences(hidden):
    rng = np.random.default_rng(1)
    net = MLP.create([3, 5, 4, 2], hidden, Activation.IDENTITY, rng)
    x = rng.normal(size=(6, 3))
    target = rng.normal(size=(6, 2))

    def loss():
        out, _ = net.forward(x)
        return 0.5 * float(np.sum((out - target) ** 2))

    out, cache = net.forward(x)
    grads, grad_in = net.backward(cache, out - target)
    h = 1e-6
    for p, g in zip(net.params(), grads):
        for idx in [tuple(i) for i in np.ndindex(p.shape)][:6]:
            orig = p[idx]
            p[idx] = orig + h
            up = loss()
            p[idx] = orig - h
            down = loss()
            p[idx] = orig
            num = (up - down) / (2 * h)
            if abs(num) < 1e-7 and abs(g[idx]) < 1e-7:
                continue
            assert _relative_error(g[idx], num) < 1e-4
    # input gradient
    orig = x[0, 0]
    x[0, 0] = orig + h
    up = loss()
    x[0, 0] = orig - h
    down = loss()
    x[0, 0] = orig
    assert _relative_error(grad_in[0, 0], (up - down) / (2 * h)) < 1e-4


def test_vae_loss_gradients_match_finite_differences():
    rng = np.random.default_rng(2)
    model = VAEModel.create(3, 2, rng, hidden=(4,))
    x = rng.random((4, 3))
    eps = rng.standard_normal((4, 2))
    _, grads = model.loss_and_grads(x, eps)
    h = 1e-6
    checked = 0
    for p, g in zip(model.params(), grads):
        idx = tuple(0 for _ in p.shape)
        orig = p[idx]
        p[idx] = orig + h
        up, _ = model.loss_and_grads(x, eps)
        p[idx] = orig - h
        down, _ = model.loss_and_grads(x, eps)
        p[idx] = orig
        num = (up - down) / (2 * h)
        if abs(num) < 1e-7 and abs(g[idx]) < 1e-7:
            continue
        assert _relative_error(g[idx], num) < 1e-4
        checked += 1
    assert checked > 0


def test_kl_of_standard_normal_is_zero():
    assert kl_standard_normal(np.zeros((1, 3)), np.zeros((1, 3)))[0] == 0.0
    rng = np.random.default_rng(0)
    assert np.all(kl_standard_normal(rng.normal(size=(5, 3)), rng.normal(size=(5, 3))) >= 0.0)


def test_vae_training_halves_reconstruction_error():
    X, _ = _blobs()
    model = train_vae(X, epochs=150, latent_dim=2, learning_rate=5e-3, seed=0, hidden=(16,), kl_weight=0.1)
    assert model.history[-1] <= 0.5 * model.history[0]
    again = train_vae(X, epochs=150, latent_dim=2, learning_rate=5e-3, seed=0, hidden=(16,), kl_weight=0.1)
    for a, b in zip(model.params(), again.params()):
        np.testing.assert_array_equal(a, b)


def test_interpolation_endpoints_are_exact():
    X, _ = _blobs()
    model = train_vae(X, epochs=5, latent_dim=2, seed=0, hidden=(8,))
    z_q, recon_q = vae_codec(model, X[0])
    z_t, recon_t = vae_codec(model, X[1])
    assert recon_q.shape == X[0].shape
    _, at_zero = interpolate(model, z_q, z_t, 0.0)
    _, at_one = interpolate(model, z_q, z_t, 1.0)
    np.testing.assert_array_equal(at_zero, model.decode(z_q)[0])
    np.testing.assert_array_equal(at_one, model.decode(z_t)[0])
    z, _ = interpolate(model, z_q, z_t, 0.2)
    np.testing.assert_allclose(z, 0.8 * z_q + 0.2 * z_t)


def test_training_divergence_is_reported():
    X, _ = _blobs()
    X = X.copy()
    X[0, 0] = np.nan
    with pytest.raises(TrainingDiverged) as exc:
        train_vae(X, epochs=3, latent_dim=2, seed=0, hidden=(4,))
    assert exc.value.epoch == 1


def test_c2c_pairs_are_cross_class():
    _, y = _blobs(40)
    s, t, cs, ct = sample_pairs(y, 2, 100, np.random.default_rng(0))
    assert np.all(cs != ct)
    assert np.all(y[s] == cs) and np.all(y[t] == ct)
    with pytest.raises(ValueError):
        sample_pairs(np.zeros(10, dtype=int), 2, 10, np.random.default_rng(0))


def test_sample_guide_argmin_and_determinism():
    X, y = _blobs()
    vae = train_vae(X, epochs=20, latent_dim=2, seed=0, hidden=(8,))
    c2c = train_c2c(vae, X, y, pair_budget=200, epochs=10, seed=1, latent_dim=2, hidden=(8,))
    q = X[0]
    guide = sample_guide(c2c, vae, q, 0, 1, n_samples=25, seed=3)
    again = sample_guide(c2c, vae, q, 0, 1, n_samples=25, seed=3)
    np.testing.assert_array_equal(guide.instance, again.instance)

    # replay the draws to check the argmin property
    codes = np.random.default_rng(3).standard_normal((25, c2c.net.latent_dim))
    z_t = vae.encode_mean(q)[0][None, :] - c2c.decode(codes, 0, 1)
    mse = np.mean((vae.decode(z_t) - q[None, :]) ** 2, axis=1)
    assert guide.mse == pytest.approx(float(mse.min()))
    assert np.all(guide.mse <= mse + 1e-15)

    single = sample_guide(c2c, vae, q, 0, 1, n_samples=1, seed=4)
    code = np.random.default_rng(4).standard_normal((1, c2c.net.latent_dim))
    expected = vae.decode(vae.encode_mean(q)[0][None, :] - c2c.decode(code, 0, 1))[0]
    np.testing.assert_allclose(single.instance, expected)
