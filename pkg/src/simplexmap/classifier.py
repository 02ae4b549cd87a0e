"""The simplex-mapping classifier.

Training is two staged: transform the labeled data into the segmented
latent space, then fit a probabilistic regressor to the transformed pairs.
Class labels come from the nearest simplex vertex of the regressed mean;
class probabilities integrate the predictive density over the cone
segments -- in closed form for two classes, by seeded Monte Carlo sampling
otherwise.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, SimplexMapError
from .geometry import SimplexGeometry, build_simplex, nearest_vertex_labels
from .preprocess import Standardization, standardize_apply, standardize_fit
from .regression import GprBackend, PredictiveDensity
from .transform import LabeledDataset, TransformConfig, transform_dataset


@dataclass(frozen=True)
class McConfig:
    """Monte-Carlo settings for the multi-class probability integrals."""

    sample_count: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.sample_count < 100:
            raise ConfigError("sample_count must be at least 100")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")


@dataclass(frozen=True)
class SimplexMapModel:
    """Trained classifier: geometry + transform config + fitted regressor
    plus the preprocessing state and the original-label dictionary.
    Immutable; all prediction methods are safe for concurrent use."""

    geometry: SimplexGeometry
    transform_cfg: TransformConfig
    fitted: object = field(repr=False)
    backend_name: str
    label_names: tuple
    scaler: Standardization = None
    seed: int = 0

    @property
    def n_classes(self) -> int:
        return self.geometry.n

    def preprocess(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.scaler is None:
            return x
        return standardize_apply(self.scaler, x)

    def predict(self, x):
        return predict(self, x)

    def predict_proba(self, x, mc: McConfig = None):
        return predict_proba(self, x, mc)

    def predict_latent(self, x) -> PredictiveDensity:
        return predict_latent(self, x)

    def predict_latent_mean(self, x) -> np.ndarray:
        return predict_latent_mean(self, x)


def fit(data: LabeledDataset, transform_cfg: TransformConfig, backend=None,
        seed: int = 0, label_names=None, standardize: bool = True) -> SimplexMapModel:
    """Train a classifier on a canonical dataset (labels 1..n).

    ``label_names`` maps class index i to the original label reported by
    ``predict``; by default the classes report as 1..n.  Standardization
    statistics come from the training features only.
    """
    n = data.n_classes
    if label_names is None:
        label_names = tuple(range(1, n + 1))
    elif len(label_names) != n:
        raise ConfigError(f"label_names must list {n} labels")
    backend = backend or GprBackend()
    geometry = build_simplex(n)

    scaler = None
    features = data.features
    if standardize and isinstance(data.features, np.ndarray):
        scaler = standardize_fit(data.features)
        features = standardize_apply(scaler, data.features)

    try:
        latent = transform_dataset(data, transform_cfg, geometry)
    except SimplexMapError as exc:
        raise type(exc)(f"transform stage: {exc}") from exc
    try:
        fitted = backend.fit(features, latent.latents, seed)
    except SimplexMapError as exc:
        raise type(exc)(f"regression stage: {exc}") from exc

    return SimplexMapModel(geometry=geometry, transform_cfg=transform_cfg,
                           fitted=fitted, backend_name=backend.name,
                           label_names=tuple(label_names), scaler=scaler, seed=seed)


def predict_latent(model: SimplexMapModel, x) -> PredictiveDensity:
    """Predictive density over the latent space (pass-through to the backend)."""
    return model.fitted.predict_density(model.preprocess(x))


def predict_latent_mean(model: SimplexMapModel, x) -> np.ndarray:
    return model.fitted.predict_mean(model.preprocess(x))


def predict(model: SimplexMapModel, x):
    """Class label(s) via the nearest-vertex rule, mapped back to the
    original labels."""
    mean = predict_latent_mean(model, x)
    if mean.ndim == 1:
        return model.label_names[nearest_vertex_labels(mean, model.geometry)[0] - 1]
    labels = nearest_vertex_labels(mean, model.geometry)
    return [model.label_names[k - 1] for k in labels]


def mc_segment_frequencies(mean, std, g: SimplexGeometry, sample_count: int,
                           rng) -> np.ndarray:
    """Fraction of diagonal-normal samples landing in each cone segment.

    Boundary samples take the smallest segment index.  The returned
    frequencies sum to 1 exactly (the float residual is folded into the
    largest entry).
    """
    samples = mean + std * rng.standard_normal((sample_count, g.dim))
    labels = nearest_vertex_labels(samples, g)
    counts = np.bincount(labels - 1, minlength=g.n)
    probs = counts / float(sample_count)
    probs[np.argmax(probs)] += 1.0 - probs.sum()
    return probs


def binary_class1_probability(mean: float, std: float) -> float:
    """Closed-form probability mass of the [0, inf) segment of a normal:
    Phi(mean/std)."""
    return float(ndtr(mean / std))


def predict_proba(model: SimplexMapModel, x, mc: McConfig = None) -> np.ndarray:
    """Calibrated class probabilities for one point or a batch.

    Two classes use the closed form regardless of ``mc``; otherwise each
    point is integrated by Monte Carlo with a substream derived from
    ``(mc.seed, point_index)``.
    """
    density = predict_latent(model, x)
    single = density.mean.ndim == 1
    means = np.atleast_2d(density.mean)
    stds = np.atleast_2d(density.std)
    n = model.n_classes
    probs = np.empty((len(means), n))
    if n == 2:
        p1 = ndtr(means[:, 0] / stds[:, 0])
        probs[:, 0] = p1
        probs[:, 1] = 1.0 - p1
    else:
        mc = mc or McConfig()
        for i in range(len(means)):
            rng = np.random.default_rng([mc.seed, i])
            probs[i] = mc_segment_frequencies(
                means[i], stds[i], model.geometry, mc.sample_count, rng)
    return probs[0] if single else probs
