"""Dataset ingestion, splitting, synthetic data, tuning, and persistence.

CSV dialect: comma delimiter, ``.`` decimal, UTF-8, mandatory header row;
lines starting with ``#`` are metadata comments and are skipped.  Model and
report documents are JSON with a mandatory ``format_version`` field.
"""

import csv
import itertools
import json
import warnings
from dataclasses import dataclass

import numpy as np

from . import __version__
from .classifier import McConfig, SimplexMapModel, fit
from .errors import ConfigError, DataError, NumericalError
from .geometry import SimplexGeometry
from .metrics import log_loss
from .preprocess import (MinMaxScaling, Standardization, minmax_apply,
                         minmax_fit, standardize_apply, standardize_fit)
from .regression import GprBackend, GprConfig, get_backend
from .transform import LabeledDataset, TransformConfig, gamma_config

MODEL_FORMAT_VERSION = 1

__all__ = [
    "read_table", "write_csv", "load_csv", "load_features", "from_arrays",
    "SplitSpec", "stratified_split", "synth_quadrants", "quadrant_label",
    "grid_search_cv", "save_model", "load_model", "save_report",
    "standardize_fit", "standardize_apply", "minmax_fit", "minmax_apply",
    "Standardization", "MinMaxScaling",
]


# ---------------------------------------------------------------------------
# CSV

def read_table(path):
    """Parse a delimited text file into (columns, string rows)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    width = len(header)
    for i, row in enumerate(body):
        if len(row) != width:
            raise DataError(f"{path}: row {i + 1} has {len(row)} fields, expected {width}")
    return header, body


def _parse_features(path, header, body, skip_col=None):
    cols = [j for j in range(len(header)) if j != skip_col]
    feats = np.empty((len(body), len(cols)))
    for i, row in enumerate(body):
        for jj, j in enumerate(cols):
            try:
                feats[i, jj] = float(row[j])
            except ValueError:
                raise DataError(
                    f"{path}: row {i + 1}, column {header[j]!r}: "
                    f"non-numeric value {row[j]!r}") from None
    return feats, [header[j] for j in cols]


def load_features(path, label_column=None):
    """Features (and raw label strings, if a label column is named)."""
    header, body = read_table(path)
    if label_column is None:
        feats, names = _parse_features(path, header, body)
        return feats, names, None
    if label_column not in header:
        raise DataError(f"{path}: no column named {label_column!r}")
    li = header.index(label_column)
    feats, names = _parse_features(path, header, body, skip_col=li)
    return feats, names, [row[li] for row in body]


def from_arrays(features, labels):
    """Remap arbitrary labels to 1..n by first appearance.

    Returns ``(LabeledDataset, label_names)`` where label_names[i] is the
    original label of class i+1.
    """
    seen = {}
    mapped = np.empty(len(labels), dtype=int)
    for i, lab in enumerate(labels):
        if lab not in seen:
            seen[lab] = len(seen) + 1
        mapped[i] = seen[lab]
    return LabeledDataset(features, mapped), list(seen)


def load_csv(path, label_column):
    """Load a labeled dataset; labels are remapped to 1..n in
    first-appearance order and the original labels returned alongside."""
    feats, _, raw = load_features(path, label_column)
    return from_arrays(feats, raw)


def write_csv(path, columns, rows, metadata=None):
    """Write rows with a ``# key=value`` metadata header (tool version is
    always included)."""
    meta = {"tool_version": __version__}
    meta.update(metadata or {})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for k, v in meta.items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# splitting

@dataclass(frozen=True)
class SplitSpec:
    train_count: int
    seed: int = 0
    stratified: bool = True
    min_train_per_class: int = 1

    def __post_init__(self):
        if self.train_count < 1:
            raise ConfigError("train_count must be positive")


def stratified_split(data: LabeledDataset, spec: SplitSpec):
    """Seeded train/test split; stratified splits allocate per-class counts
    proportionally with largest-remainder rounding."""
    if spec.train_count >= data.size:
        raise ConfigError(
            f"train_count={spec.train_count} must be below the dataset size {data.size}")
    rng = np.random.default_rng(spec.seed)
    if spec.stratified:
        counts = data.class_counts()
        exact = spec.train_count * counts / data.size
        quota = np.floor(exact).astype(int)
        remainder = exact - quota
        short = spec.train_count - quota.sum()
        for y in np.argsort(-remainder, kind="stable")[:short]:
            quota[y] += 1
        train_idx = []
        for y in range(1, data.n_classes + 1):
            members = data.class_indices(y)
            perm = rng.permutation(len(members))
            train_idx.extend(members[perm[:quota[y - 1]]])
        train_idx = np.sort(np.asarray(train_idx, dtype=int))
    else:
        perm = rng.permutation(data.size)
        train_idx = np.sort(perm[:spec.train_count])
    mask = np.zeros(data.size, dtype=bool)
    mask[train_idx] = True
    train = data.subset(np.where(mask)[0])
    got = np.bincount(train.labels, minlength=data.n_classes + 1)[1:]
    if np.any(got < spec.min_train_per_class):
        raise ConfigError(
            f"split leaves a class with fewer than {spec.min_train_per_class} "
            f"training members (counts {got.tolist()})")
    return train, data.subset(np.where(~mask)[0])


# ---------------------------------------------------------------------------
# synthetic data

def quadrant_label(x1: float, x2: float) -> int:
    """Quadrant class rule on [-1, 1]^2 with boundaries attached clockwise
    from the first quadrant."""
    if x1 >= 0 and x2 >= 0:
        return 1
    if x1 < 0 and x2 >= 0:
        return 2
    if x1 < 0 and x2 < 0:
        return 3
    return 4


def synth_quadrants(count: int, seed: int = 0) -> LabeledDataset:
    """Uniform samples on [-1, 1]^2 labeled by quadrant."""
    rng = np.random.default_rng(seed)
    feats = rng.uniform(-1.0, 1.0, size=(count, 2))
    labels = np.array([quadrant_label(a, b) for a, b in feats])
    if len(np.unique(labels)) < 4:
        raise DataError(
            f"only {len(np.unique(labels))} of 4 quadrants sampled; increase count")
    return LabeledDataset(feats, labels)


# ---------------------------------------------------------------------------
# cross-validated grid search

_GRID_KEYS = ("gamma", "k_alpha", "k_beta", "metric", "nu")
_GRID_DEFAULTS = {"gamma": [1.0], "k_alpha": [1], "k_beta": [1],
                  "metric": ["euclidean"], "nu": [2.5]}


def stratified_folds(data: LabeledDataset, folds: int, seed: int):
    """Class-proportional fold assignment; returns a fold index per point."""
    if folds < 2:
        raise ConfigError("need at least 2 folds")
    if folds > int(np.min(data.class_counts())):
        raise DataError(
            f"folds={folds} exceeds the smallest class cardinality "
            f"{int(np.min(data.class_counts()))}")
    rng = np.random.default_rng(seed)
    assignment = np.empty(data.size, dtype=int)
    for y in range(1, data.n_classes + 1):
        members = data.class_indices(y)
        perm = rng.permutation(len(members))
        for f, chunk in enumerate(np.array_split(members[perm], folds)):
            assignment[chunk] = f
    return assignment


def grid_search_cv(data: LabeledDataset, grid: dict, folds: int = 5,
                   seed: int = 0, mc_samples: int = 2000):
    """Pick the transform + regressor configuration with the best mean
    validation log-loss over stratified folds.

    ``grid`` maps any of gamma, k_alpha, k_beta, metric, nu to candidate
    lists; omitted keys use single defaults.  Configurations violating the
    cardinality constraints in any fold are skipped with a warning.  Ties
    keep the earlier grid point.
    """
    unknown = set(grid) - set(_GRID_KEYS)
    if unknown:
        raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
    axes = [list(grid.get(k, _GRID_DEFAULTS[k])) for k in _GRID_KEYS]
    assignment = stratified_folds(data, folds, seed)
    splits = []
    for f in range(folds):
        splits.append((data.subset(np.where(assignment != f)[0]),
                       data.subset(np.where(assignment == f)[0])))

    results = []
    best = None
    for gi, (gamma, ka, kb, metric, nu) in enumerate(itertools.product(*axes)):
        try:
            t_cfg = gamma_config(gamma, ka, kb, metric)
            for train, _ in splits:
                t_cfg.validate_for(train)
            g_cfg = GprConfig(matern_nu=nu)
        except ConfigError as exc:
            warnings.warn(f"grid point {gi} skipped: {exc}", stacklevel=2)
            results.append({"grid_index": gi, "gamma": gamma, "k_alpha": ka,
                            "k_beta": kb, "metric": metric, "nu": nu,
                            "log_loss": None, "skipped": str(exc)})
            continue
        fold_losses = []
        for fi, (train, val) in enumerate(splits):
            model = fit(train, t_cfg, backend=GprBackend(g_cfg),
                        seed=int(np.random.default_rng([seed, gi, fi]).integers(2**32)))
            probs = model.predict_proba(
                val.features, McConfig(sample_count=mc_samples,
                                       seed=int(np.random.default_rng(
                                           [seed, 1, gi, fi]).integers(2**32))))
            fold_losses.append(log_loss(val.labels, np.atleast_2d(probs)))
        score = float(np.mean(fold_losses))
        results.append({"grid_index": gi, "gamma": gamma, "k_alpha": ka,
                        "k_beta": kb, "metric": metric, "nu": nu,
                        "log_loss": score, "fold_log_losses": fold_losses})
        if best is None or score < best[0]:
            best = (score, t_cfg, g_cfg)
    if best is None:
        raise ConfigError("every grid point was skipped; nothing to select")
    return best[1], best[2], results


# ---------------------------------------------------------------------------
# persistence

def save_model(model: SimplexMapModel, path) -> None:
    """Write the versioned model document.  Loading refactorizes the stored
    training data under the stored hyperparameters, reproducing predictions
    bitwise."""
    backend = get_backend(model.backend_name)
    if not hasattr(backend, "fitted_state"):
        raise ConfigError(
            f"backend {model.backend_name!r} does not support serialization")
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "simplexmap-model",
        "tool_version": __version__,
        "seed": model.seed,
        "n_classes": model.n_classes,
        "label_names": list(model.label_names),
        "geometry_vertices": model.geometry.vertices.tolist(),
        "transform": {
            "alpha": model.transform_cfg.alpha,
            "beta": model.transform_cfg.beta,
            "k_alpha": model.transform_cfg.k_alpha,
            "k_beta": model.transform_cfg.k_beta,
            "metric": model.transform_cfg.metric,
        },
        "preprocessing": None if model.scaler is None else {
            "type": "standardize",
            "mean": model.scaler.mean.tolist(),
            "scale": model.scaler.scale.tolist(),
        },
        "backend": {"name": model.backend_name,
                    "state": backend.fitted_state(model.fitted)},
        "training": {"inputs": model.fitted.inputs.tolist(),
                     "targets": model.fitted.targets.tolist()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path) -> SimplexMapModel:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a valid model document ({exc})") from None
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise DataError(
            f"{path}: model format_version {version!r} is not supported "
            f"(expected {MODEL_FORMAT_VERSION})")
    backend = get_backend(doc["backend"]["name"])
    if not hasattr(backend, "restore"):
        raise ConfigError(
            f"backend {doc['backend']['name']!r} does not support loading")
    fitted = backend.restore(np.asarray(doc["training"]["inputs"]),
                             np.asarray(doc["training"]["targets"]),
                             doc["backend"]["state"])
    pre = doc.get("preprocessing")
    scaler = None
    if pre is not None:
        scaler = Standardization(mean=np.asarray(pre["mean"]),
                                 scale=np.asarray(pre["scale"]))
    t = doc["transform"]
    geometry = SimplexGeometry(n=doc["n_classes"],
                               vertices=np.asarray(doc["geometry_vertices"]))
    return SimplexMapModel(
        geometry=geometry,
        transform_cfg=TransformConfig(alpha=t["alpha"], beta=t["beta"],
                                      k_alpha=t["k_alpha"], k_beta=t["k_beta"],
                                      metric=t["metric"]),
        fitted=fitted, backend_name=doc["backend"]["name"],
        label_names=tuple(doc["label_names"]), scaler=scaler,
        seed=doc["seed"])


def save_report(payload: dict, path, seed=None) -> None:
    """Write a JSON report with the standard metadata fields."""
    doc = {"format_version": MODEL_FORMAT_VERSION, "tool_version": __version__}
    if seed is not None:
        doc["seed"] = seed
    doc.update(payload)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
