"""Training-data transformation into the segmented latent space.

Each labeled training point is mapped into the interior of its class's cone
segment.  The position is set by an attraction coefficient (reciprocal mean
distance to the k_alpha nearest own-class neighbors, pulling toward the own
vertex) and one repulsion coefficient per foreign class (mean distance to
the k_beta nearest members of that class, pushing away from its segment),
measured with a pluggable semimetric.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .geometry import SimplexGeometry


class DataQualityWarning(UserWarning):
    """Labeled data violates a semimetric axiom (e.g. cross-class duplicates)."""


# ---------------------------------------------------------------------------
# semimetrics

@dataclass(frozen=True)
class Semimetric:
    """Named deterministic pairwise distance: symmetric, nonnegative, zero
    iff the items coincide.  ``row`` computes distances from item i to all
    items and must agree bitwise with per-pair evaluation."""

    name: str
    pair: callable
    row: callable = None

    def distances_from(self, items, i: int) -> np.ndarray:
        if self.row is not None:
            return self.row(items, i)
        return np.array([self.pair(items[i], item) for item in items], dtype=float)


def _euclidean_pair(a, b):
    return float(np.sqrt(np.sum((np.asarray(a, float) - np.asarray(b, float)) ** 2)))


def _euclidean_row(items, i):
    x = np.asarray(items, dtype=float)
    return np.sqrt(np.sum((x - x[i]) ** 2, axis=1))


def _taxicab_pair(a, b):
    return float(np.sum(np.abs(np.asarray(a, float) - np.asarray(b, float))))


def _taxicab_row(items, i):
    x = np.asarray(items, dtype=float)
    return np.sum(np.abs(x - x[i]), axis=1)


_SEMIMETRICS = {
    "euclidean": Semimetric("euclidean", _euclidean_pair, _euclidean_row),
    "taxicab": Semimetric("taxicab", _taxicab_pair, _taxicab_row),
}


def register_semimetric(name: str, pair, row=None) -> Semimetric:
    """Register a user-supplied semimetric under ``name`` (usable in configs
    and CLI flags as ``plugin:<name>``)."""
    metric = Semimetric(name, pair, row)
    _SEMIMETRICS[name] = metric
    return metric


def get_semimetric(name: str) -> Semimetric:
    if name.startswith("plugin:"):
        name = name[len("plugin:"):]
    try:
        return _SEMIMETRICS[name]
    except KeyError:
        raise ConfigError(
            f"unknown semimetric {name!r}; built-ins: euclidean, taxicab"
        ) from None


# ---------------------------------------------------------------------------
# datasets

@dataclass(frozen=True)
class LabeledDataset:
    """Training items with class labels remapped to 1..n.

    ``features`` is a (D, m) float array for vector data, or any indexable
    sequence of opaque items when a custom semimetric is used.
    """

    features: object
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1 or len(labels) != len(self.features):
            raise DataError("labels must be a 1-d sequence matching the items")
        if labels.min(initial=1) < 1:
            raise DataError("class labels must be 1-based")
        n = int(labels.max())
        counts = np.bincount(labels, minlength=n + 1)[1:]
        if np.any(counts == 0):
            missing = int(np.where(counts == 0)[0][0]) + 1
            raise DataError(f"class {missing} has no members; labels must be contiguous from 1")
        if len(labels) < n:
            raise DataError("need at least as many points as classes")

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def n_classes(self) -> int:
        return int(self.labels.max())

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes + 1)[1:]

    def class_indices(self, y: int) -> np.ndarray:
        return np.where(self.labels == y)[0]

    def subset(self, indices) -> "LabeledDataset":
        indices = np.asarray(indices, dtype=int)
        feats = self.features[indices] if isinstance(self.features, np.ndarray) \
            else [self.features[i] for i in indices]
        return LabeledDataset(feats, self.labels[indices])


@dataclass(frozen=True)
class LatentDataset:
    """Transformed training set: each item paired with its latent image."""

    features: object
    latents: np.ndarray
    labels: np.ndarray


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class TransformConfig:
    alpha: float
    beta: float
    k_alpha: int = 1
    k_beta: int = 1
    metric: str = "euclidean"

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be nonnegative")
        if self.alpha + self.beta <= 0:
            raise ConfigError("alpha + beta must be positive")
        if self.k_alpha < 1 or self.k_beta < 1:
            raise ConfigError("k_alpha and k_beta must be positive integers")
        get_semimetric(self.metric)  # fail fast on unknown names

    def semimetric(self) -> Semimetric:
        return get_semimetric(self.metric)

    def validate_for(self, data: LabeledDataset) -> None:
        """Check the class-cardinality constraints against a dataset."""
        c = int(np.min(data.class_counts()))
        if self.alpha > 0 and self.k_alpha > c - 1:
            raise ConfigError(
                f"k_alpha={self.k_alpha} exceeds c-1={c - 1} "
                f"(smallest class has {c} members)"
            )
        if self.beta > 0 and self.k_beta > c:
            raise ConfigError(
                f"k_beta={self.k_beta} exceeds c={c} (smallest class cardinality)"
            )


def gamma_config(gamma: float, k_alpha: int = 1, k_beta: int = 1,
                 metric: str = "euclidean") -> TransformConfig:
    """Single-parameter weighting: beta = gamma, alpha = 1 - gamma."""
    if not 0.0 <= gamma <= 1.0:
        raise ConfigError(f"gamma must lie in [0, 1], got {gamma}")
    return TransformConfig(alpha=1.0 - gamma, beta=gamma,
                           k_alpha=k_alpha, k_beta=k_beta, metric=metric)


# ---------------------------------------------------------------------------
# coefficients

def _mean_k_smallest(distances: np.ndarray, k: int) -> float:
    if k > len(distances):
        raise DataError(
            f"need {k} neighbors but only {len(distances)} are available"
        )
    return float(np.mean(np.partition(distances, k - 1)[:k]))


def mean_knn_distance(query_index: int, pool, k: int, metric: Semimetric,
                      data: LabeledDataset, exclude_zero: bool = True) -> float:
    """Mean distance from the query point to its k nearest pool members.

    The query itself is never its own neighbor; with ``exclude_zero`` (the
    set semantics of removing the query value) any pool member at distance
    exactly 0 is dropped as well.
    """
    pool = np.asarray(list(pool), dtype=int)
    d = metric.distances_from(data.features, query_index)[pool]
    keep = pool != query_index
    if exclude_zero:
        keep &= d != 0.0
    return _mean_k_smallest(d[keep], k)


def attraction(query_index: int, cfg: TransformConfig, data: LabeledDataset) -> float:
    """Reciprocal mean distance to the k_alpha nearest own-class neighbors."""
    own = data.class_indices(int(data.labels[query_index]))
    nn = mean_knn_distance(query_index, own, cfg.k_alpha, cfg.semimetric(), data)
    return 1.0 / nn


def repulsion(query_index: int, foreign_class: int, cfg: TransformConfig,
              data: LabeledDataset) -> float:
    """Mean distance to the k_beta nearest members of ``foreign_class``."""
    if foreign_class == int(data.labels[query_index]):
        raise ConfigError("repulsion is defined against foreign classes only")
    pool = data.class_indices(foreign_class)
    d = cfg.semimetric().distances_from(data.features, query_index)[pool]
    if cfg.k_beta > len(d):
        raise DataError(
            f"class {foreign_class} has {len(d)} members, fewer than k_beta={cfg.k_beta}"
        )
    selected = np.partition(d, cfg.k_beta - 1)[:cfg.k_beta]
    if np.any(selected == 0.0):
        warnings.warn(
            f"point {query_index} coincides with a class-{foreign_class} point; "
            "repulsion is degenerate",
            DataQualityWarning,
            stacklevel=2,
        )
    return float(np.mean(selected))


def transform_point(query_index: int, cfg: TransformConfig, g: SimplexGeometry,
                    data: LabeledDataset) -> np.ndarray:
    """Latent image of one training point: sum over foreign classes y of
    (alpha*A + beta*R(y)) * (-p_y)."""
    label = int(data.labels[query_index])
    a = cfg.alpha * attraction(query_index, cfg, data) if cfg.alpha > 0 else 0.0
    z = np.zeros(g.dim)
    for y in range(1, g.n + 1):
        if y == label:
            continue
        coeff = a
        if cfg.beta > 0:
            coeff = coeff + cfg.beta * repulsion(query_index, y, cfg, data)
        z -= coeff * g.vertices[y - 1]
    return z


def transform_dataset(data: LabeledDataset, cfg: TransformConfig,
                      g: SimplexGeometry) -> LatentDataset:
    """Apply :func:`transform_point` to every index."""
    if g.n != data.n_classes:
        raise ConfigError(
            f"geometry has {g.n} segments but the data has {data.n_classes} classes"
        )
    cfg.validate_for(data)
    latents = np.empty((data.size, g.dim))
    for i in range(data.size):
        try:
            latents[i] = transform_point(i, cfg, g, data)
        except (DataError, ConfigError) as exc:
            raise type(exc)(f"transforming point {i}: {exc}") from exc
    return LatentDataset(features=data.features, latents=latents, labels=data.labels)
