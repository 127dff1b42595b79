import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpfed.blocks import ConfigurationError
from dpfed.dp import DPConfig, NoiseStream, clip, clip_batch, noisy_batch_mean


def cfg(C=0.1, sigma=1.0, s=1.0, R=10):
    return DPConfig(C, sigma, s, R)


def test_clip_shrinks_to_threshold():
    g = np.array([0.12, 0.16])  # norm 0.2
    out = clip(g, 0.1)
    assert np.linalg.norm(out) == pytest.approx(0.1, rel=1e-12)
    cos = np.dot(out, g) / (np.linalg.norm(out) * np.linalg.norm(g))
    assert cos == pytest.approx(1.0, abs=1e-12)


def test_clip_noop_below_threshold():
    g = np.array([0.03, 0.04])  # norm 0.05
    assert np.array_equal(clip(g, 0.1), g)


def test_clip_zero():
    assert np.array_equal(clip(np.zeros(3), 0.1), np.zeros(3))


def test_clip_rejects_nonfinite():
    with pytest.raises(ConfigurationError):
        clip(np.array([np.nan, 1.0]), 0.1)


@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=10),
       st.floats(1e-3, 10))
@settings(max_examples=200, deadline=None)
def test_clip_never_increases_norm_and_idempotent(vals, C):
    g = np.array(vals)
    once = clip(g, C)
    assert np.linalg.norm(once) <= C or np.linalg.norm(once) <= np.linalg.norm(g)
    assert np.linalg.norm(once) <= C + 0.0
    assert np.array_equal(clip(once, C), once)


def test_zero_noise_is_exact_mean():
    rng = np.random.default_rng(0)
    grads = rng.standard_normal((10, 4)) * 0.01
    c = cfg(sigma=0.0)
    out = noisy_batch_mean(clip_batch(grads, c.clip_norm), c, None)
    assert np.allclose(out, grads.mean(axis=0), rtol=1e-12, atol=1e-15)


def test_zero_noise_large_clip_equals_plain_batch_gradient():
    rng = np.random.default_rng(1)
    grads = rng.standard_normal((10, 4))
    c = DPConfig(1e6, 0.0, 1.0, 10)
    out = noisy_batch_mean(clip_batch(grads, c.clip_norm), c, None)
    assert np.allclose(out, grads.mean(axis=0), rtol=1e-12)


def test_permutation_equivariance_exact():
    rng = np.random.default_rng(2)
    grads = clip_batch(rng.standard_normal((10, 5)) * 0.02, 0.1)
    stream = NoiseStream(3)
    a = noisy_batch_mean(grads, cfg(), stream, key=(0, 0, 1))
    b = noisy_batch_mean(grads[rng.permutation(10)], cfg(), stream,
                         key=(0, 0, 1))
    assert np.array_equal(a, b)


def test_determinism_and_key_separation():
    grads = np.zeros((10, 4))
    stream = NoiseStream(7)
    a = noisy_batch_mean(grads, cfg(), stream, key=(1, 2, 3))
    b = noisy_batch_mean(grads, cfg(), stream, key=(1, 2, 3))
    c = noisy_batch_mean(grads, cfg(), stream, key=(1, 2, 4))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_unclipped_input_rejected():
    grads = np.full((10, 4), 1.0)
    with pytest.raises(ConfigurationError):
        noisy_batch_mean(grads, cfg(), NoiseStream(0))


def test_empty_batch_rejected():
    with pytest.raises(ConfigurationError):
        noisy_batch_mean(np.zeros((0, 3)), cfg(), NoiseStream(0))


def test_wrong_batch_size_rejected():
    with pytest.raises(ConfigurationError):
        noisy_batch_mean(np.zeros((5, 3)), cfg(), NoiseStream(0))


def test_monte_carlo_mean_and_variance():
    # CLT oracle: over 1e5 keyed draws the empirical mean stays within
    # 4 sigma/sqrt(n) of the clean mean and the per-coordinate variance
    # within 5% of (sigma*C/(sR))^2.
    n_draws = 100_000
    c = cfg(C=0.1, sigma=1.0, s=1.0, R=10)
    g = np.full((10, 2), 0.01)
    stream = NoiseStream(11)
    rng = stream.rng((0, 99))
    tau = c.noise_std
    clean = g.mean(axis=0)
    outs = clean[None, :] + tau * rng.standard_normal((n_draws, 2))
    # single draw through the public path, same distribution family
    one = noisy_batch_mean(g, c, stream, key=(0, 0, 1))
    assert one.shape == clean.shape
    emp_mean = outs.mean(axis=0)
    emp_var = outs.var(axis=0)
    assert np.all(np.abs(emp_mean - clean) < 4 * tau / np.sqrt(n_draws))
    assert np.all(np.abs(emp_var - tau**2) < 0.05 * tau**2)


def test_monte_carlo_through_public_path():
    # Unbiasedness of the public operation itself, 20k keyed draws.
    n_draws = 20_000
    c = cfg(C=0.1, sigma=1.0, s=1.0, R=10)
    g = np.full((10, 2), 0.01)
    stream = NoiseStream(13)
    tau = c.noise_std
    acc = np.zeros(2)
    acc2 = np.zeros(2)
    for i in range(n_draws):
        out = noisy_batch_mean(g, c, stream, key=(0, 0, i))
        acc += out
        acc2 += out * out
    mean = acc / n_draws
    var = acc2 / n_draws - mean**2
    assert np.all(np.abs(mean - 0.01) < 5 * tau / np.sqrt(n_draws))
    assert np.all(np.abs(var - tau**2) < 0.05 * tau**2)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        DPConfig(0.0, 1.0, 1.0, 10)
    with pytest.raises(ConfigurationError):
        DPConfig(0.1, -1.0, 1.0, 10)
    with pytest.raises(ConfigurationError):
        DPConfig(0.1, 1.0, 0.0, 10)
    with pytest.raises(ConfigurationError):
        DPConfig(0.1, 1.0, 0.01, 10)  # floor(s*R) = 0


def test_noise_std_formula():
    assert cfg(C=0.1, sigma=1.0, s=1.0, R=10).noise_std == pytest.approx(0.01)
    assert cfg(C=0.2, sigma=2.0, s=0.5, R=20).noise_std == pytest.approx(0.04)
