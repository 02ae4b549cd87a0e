import math

import numpy as np
import pytest

from simplexmap.classifier import (McConfig, SimplexMapModel,
                                   binary_class1_probability, fit,
                                   mc_segment_frequencies, predict_latent,
                                   predict_latent_mean, predict_proba)
from simplexmap.errors import ConfigError
from simplexmap.geometry import (build_simplex, nearest_vertex_labels,
                                 vertex_permutation_map)
from simplexmap.regression import GprBackend, PredictiveDensity, noise_free
from simplexmap.transform import LabeledDataset, TransformConfig, gamma_config
from simplexmap.transform import transform_dataset

from test_transform import ternary_toy_set


class StubFitted:
    """Backend double with a fixed predictive density."""

    def __init__(self, mean, std):
        self.mean = np.asarray(mean, dtype=float)
        self.std = np.asarray(std, dtype=float)

    def predict_mean(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self.mean
        return np.broadcast_to(self.mean, (len(x), len(self.mean))).copy()

    def predict_density(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return PredictiveDensity(self.mean, self.std)
        shape = (len(x), len(self.mean))
        return PredictiveDensity(np.broadcast_to(self.mean, shape).copy(),
                                 np.broadcast_to(self.std, shape).copy())


def stub_model(n, mean, std, label_names=None):
    g = build_simplex(n)
    return SimplexMapModel(
        geometry=g, transform_cfg=TransformConfig(alpha=0.0, beta=1.0),
        fitted=StubFitted(mean, std), backend_name="stub",
        label_names=tuple(label_names or range(1, n + 1)), scaler=None)


def toy_model(seed=0, gamma=1.0):
    feats, labels = ternary_toy_set()
    data = LabeledDataset(feats, labels)
    return data, fit(data, gamma_config(gamma, 1, 1),
                     backend=GprBackend(noise_free()), seed=seed)


def test_mcconfig_validation():
    with pytest.raises(ConfigError):
        McConfig(sample_count=50)
    with pytest.raises(ConfigError):
        McConfig(seed=-1)


def test_toy_set_training_reconstruction():
    data, model = toy_model()
    assert model.predict(data.features) == list(data.labels)


def test_training_latents_reproduced_by_noise_free_fit():
    data, model = toy_model()
    latent = transform_dataset(data, model.transform_cfg, model.geometry)
    scaled = model.preprocess(data.features)
    assert np.max(np.abs(model.fitted.predict_mean(scaled) - latent.latents)) <= 1e-5
    mean_via_api = predict_latent_mean(model, data.features)
    assert np.max(np.abs(mean_via_api - latent.latents)) <= 1e-5


def test_predict_at_origin_takes_first_label():
    model = stub_model(4, np.zeros(3), np.ones(3), label_names=["w", "x", "y", "z"])
    assert model.predict(np.zeros(5)) == "w"


def test_predict_maps_back_through_label_names():
    data, _ = toy_model()
    model = fit(data, gamma_config(1.0), backend=GprBackend(noise_free()),
                label_names=["red", "green", "blue"])
    assert model.predict(data.features) == \
        [["red", "green", "blue"][y - 1] for y in data.labels]


def test_fit_rejects_wrong_label_names_length():
    data, _ = toy_model()
    with pytest.raises(ConfigError):
        fit(data, gamma_config(1.0), label_names=["a", "b"])


def test_fit_stage_context_in_errors():
    feats = np.array([[0.0], [0.0], [1.0], [2.0]])
    data = LabeledDataset(feats, [1, 1, 2, 2])
    with pytest.raises(Exception, match="transform stage"):
        fit(data, TransformConfig(alpha=1.0, beta=0.0), backend=GprBackend())


# ---------------------------------------------------------------------------
# probabilities: binary closed form

def test_binary_probability_symmetric_density():
    model = stub_model(2, [0.0], [1.3])
    probs = model.predict_proba(np.zeros(3))
    assert probs[0] == pytest.approx(0.5, abs=1e-15)
    assert probs.sum() == 1.0


def test_binary_probability_phi_oracle():
    # independent oracle: Phi(1) through the error function
    phi1 = 0.5 * (1.0 + math.erf(1.0 / math.sqrt(2.0)))
    model = stub_model(2, [1.0], [1.0])
    probs = model.predict_proba(np.zeros(2))
    assert probs[0] == pytest.approx(phi1, abs=1e-12)
    assert probs[0] == pytest.approx(0.841345, abs=5e-7)
    assert binary_class1_probability(1.0, 1.0) == pytest.approx(phi1, abs=1e-12)


def test_binary_closed_form_ignores_mc_config():
    model = stub_model(2, [0.7], [0.4])
    a = model.predict_proba(np.zeros(1), McConfig(sample_count=100, seed=1))
    b = model.predict_proba(np.zeros(1), McConfig(sample_count=5000, seed=9))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("seed", range(20))
def test_binary_closed_form_vs_mc_oracle(seed):
    rng = np.random.default_rng(700 + seed)
    mu = float(rng.uniform(-2, 2))
    sigma = float(rng.uniform(0.1, 2.0))
    p = binary_class1_probability(mu, sigma)
    g = build_simplex(2)
    s = 100_000
    freq = mc_segment_frequencies(np.array([mu]), np.array([sigma]), g, s,
                                  np.random.default_rng([800, seed]))
    bound = 3.0 * math.sqrt(p * (1.0 - p) / s)
    assert abs(p - freq[0]) <= max(bound, 1e-12)


# ---------------------------------------------------------------------------
# probabilities: Monte Carlo

def test_symmetric_three_class_density():
    model = stub_model(3, np.zeros(2), np.ones(2))
    s = 40_000
    probs = model.predict_proba(np.zeros(4), McConfig(sample_count=s, seed=3))
    assert np.all(np.abs(probs - 1.0 / 3.0) <= 4.0 / math.sqrt(s))


def test_probability_normalization_and_range():
    model = stub_model(5, np.array([0.3, -1.2, 0.4, 2.0]), np.full(4, 0.8))
    probs = np.atleast_2d(model.predict_proba(
        np.zeros((7, 3)), McConfig(sample_count=1000, seed=11)))
    assert np.all(probs >= 0.0) and np.all(probs <= 1.0)
    assert np.all(probs.sum(axis=1) == 1.0)


def test_mc_determinism_and_batch_order_independence():
    model = stub_model(4, np.array([0.2, 0.1, -0.3]), np.full(3, 0.9))
    x = np.zeros((3, 2))
    mc = McConfig(sample_count=500, seed=21)
    a = model.predict_proba(x, mc)
    b = model.predict_proba(x, mc)
    assert np.array_equal(a, b)
    # per-point substreams: extending the batch cannot change earlier rows
    c = model.predict_proba(np.zeros((5, 2)), mc)
    assert np.array_equal(a, c[:3])
    d = model.predict_proba(x, McConfig(sample_count=500, seed=22))
    assert not np.array_equal(a, d)


def test_mc_equivariance_under_vertex_permutation():
    # common random numbers: transforming the same samples by the vertex
    # permutation map permutes the segment frequencies exactly
    g = build_simplex(4)
    rng = np.random.default_rng(31)
    mu = np.array([0.4, -0.2, 0.1])
    samples = mu + 0.8 * rng.standard_normal((20_000, 3))
    perm = [2, 3, 1, 0]
    q = vertex_permutation_map(perm, g)
    base = np.bincount(nearest_vertex_labels(samples, g) - 1, minlength=4)
    mapped = np.bincount(nearest_vertex_labels(samples @ q.T, g) - 1, minlength=4)
    for k in range(4):
        assert base[k] == mapped[perm[k]]


def test_binary_label_swap_flips_probabilities():
    feats = np.array([[0.0], [0.6], [2.0], [2.8], [4.0]])
    data_a = LabeledDataset(feats, [1, 1, 2, 2, 2])
    data_b = LabeledDataset(feats, [2, 2, 1, 1, 1])
    cfg = TransformConfig(alpha=0, beta=1)
    model_a = fit(data_a, cfg, backend=GprBackend(noise_free()), seed=2)
    model_b = fit(data_b, cfg, backend=GprBackend(noise_free()), seed=2)
    pts = np.linspace(-1, 5, 13)[:, None]
    pa = model_a.predict_proba(pts)
    pb = model_b.predict_proba(pts)
    assert np.allclose(pa[:, 0], pb[:, 1], atol=1e-9)
    assert np.allclose(pa[:, 1], pb[:, 0], atol=1e-9)


def test_predict_agrees_with_proba_argmax():
    rng = np.random.default_rng(41)
    feats = rng.uniform(-1, 1, size=(20, 2))
    labels = 1 + (feats[:, 0] > 0) + 2 * (feats[:, 1] > 0)
    # ensure all four classes appear
    feats = np.vstack([feats, [[-0.5, -0.5], [0.5, -0.5], [-0.5, 0.5], [0.5, 0.5]]])
    labels = np.concatenate([labels, [1, 2, 3, 4]])
    model = fit(LabeledDataset(feats, labels), gamma_config(1.0), seed=3)
    pts = rng.uniform(-1.2, 1.2, size=(40, 2))
    s = 100_000
    probs = model.predict_proba(pts, McConfig(sample_count=s, seed=5))
    pred = model.predict(pts)
    for i in range(len(pts)):
        order = np.sort(probs[i])[::-1]
        se = math.sqrt(max(order[0] * (1 - order[0]), 1e-12) / s)
        if order[0] - order[1] >= 3.0 * se:
            assert pred[i] == int(np.argmax(probs[i])) + 1


# ---------------------------------------------------------------------------
# latent access

def test_predict_latent_passthrough():
    mean = np.array([0.5, -0.25])
    std = np.array([0.1, 0.2])
    model = stub_model(3, mean, std)
    den = predict_latent(model, np.zeros(6))
    assert np.array_equal(den.mean, mean)
    assert np.array_equal(den.std, std)
    assert np.all(den.std > 0)
    assert np.array_equal(predict_latent_mean(model, np.zeros(6)), mean)


def test_predict_proba_batch_vs_single_shapes():
    model = stub_model(3, np.array([0.2, 0.3]), np.array([0.5, 0.5]))
    single = model.predict_proba(np.zeros(2), McConfig(sample_count=400, seed=1))
    batch = model.predict_proba(np.zeros((2, 2)), McConfig(sample_count=400, seed=1))
    assert single.shape == (3,)
    assert batch.shape == (2, 3)
    assert np.array_equal(single, batch[0])
