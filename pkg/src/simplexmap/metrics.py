"""Scoring and calibration diagnostics.

Labels are class indices 1..n throughout; probability matrices are
(T, n) with columns in class-index order.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError

PROB_CLIP = 1e-15


@dataclass(frozen=True)
class EvaluationReport:
    accuracy: float
    log_loss: float
    proba_loss: float
    precision_weighted: float
    recall_weighted: float
    f1_weighted: float
    confusion: np.ndarray = field(repr=False)
    top_k: dict = None

    def to_dict(self) -> dict:
        out = {
            "accuracy": self.accuracy,
            "log_loss": self.log_loss,
            "proba_loss": self.proba_loss,
            "precision_weighted": self.precision_weighted,
            "recall_weighted": self.recall_weighted,
            "f1_weighted": self.f1_weighted,
            "confusion": self.confusion.tolist(),
        }
        if self.top_k is not None:
            out["top_k"] = {str(k): v for k, v in self.top_k.items()}
        return out


@dataclass(frozen=True)
class CalibrationCurve:
    """Non-empty bins of a reliability diagram: (mean predicted probability,
    true fraction, count) per bin, using ten equal-width bins on [0, 1]."""

    bins: tuple

    def to_dict(self) -> dict:
        return {"bins": [
            {"mean_predicted": m, "true_fraction": f, "count": c}
            for m, f, c in self.bins
        ]}


def _check_probs(probs):
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 2:
        raise DataError("predicted probabilities must be a (T, n) matrix")
    return probs


def _check_labels(labels, n):
    labels = np.asarray(labels, dtype=int)
    if labels.min(initial=1) < 1 or labels.max(initial=1) > n:
        raise DataError(f"labels must lie in 1..{n}")
    return labels


def proba_loss(true_labels, predicted_probs) -> float:
    """One minus the mean probability assigned to the true class."""
    probs = _check_probs(predicted_probs)
    labels = _check_labels(true_labels, probs.shape[1])
    picked = probs[np.arange(len(labels)), labels - 1]
    return float(1.0 - picked.mean())


def log_loss(true_labels, predicted_probs) -> float:
    """Cross-entropy of the true labels under the predicted probabilities,
    clipped to [1e-15, 1 - 1e-15]."""
    probs = _check_probs(predicted_probs)
    labels = _check_labels(true_labels, probs.shape[1])
    picked = probs[np.arange(len(labels)), labels - 1]
    picked = np.clip(picked, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-np.mean(np.log(picked)))


def confusion_matrix(true_labels, predicted_labels, n: int = None) -> np.ndarray:
    """Count matrix with rows = true class, columns = predicted class."""
    t = np.asarray(true_labels, dtype=int)
    p = np.asarray(predicted_labels, dtype=int)
    if len(t) != len(p):
        raise DataError("label sequences differ in length")
    if n is None:
        n = int(max(t.max(initial=1), p.max(initial=1)))
    _check_labels(t, n)
    _check_labels(p, n)
    m = np.zeros((n, n), dtype=int)
    np.add.at(m, (t - 1, p - 1), 1)
    return m


def accuracy(true_labels, predicted_labels) -> float:
    t = np.asarray(true_labels)
    p = np.asarray(predicted_labels)
    return float(np.mean(t == p))


def weighted_prf(true_labels, predicted_labels, n: int = None):
    """Support-weighted precision, recall and f1.

    Per-class scores are averaged with weights equal to the true-class
    support; a class never predicted contributes precision 0 (with a
    warning).
    """
    m = confusion_matrix(true_labels, predicted_labels, n)
    support = m.sum(axis=1)
    predicted_support = m.sum(axis=0)
    tp = np.diag(m).astype(float)
    if np.any((predicted_support == 0) & (support > 0)):
        warnings.warn("some classes are never predicted; their precision counts as 0",
                      stacklevel=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted_support > 0, tp / predicted_support, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)
    w = support / support.sum()
    return float(w @ precision), float(w @ recall), float(w @ f1)


def top_k_accuracy(true_labels, predicted_probs, k: int) -> float:
    """Fraction of points whose true class is among the k most probable;
    probability ties rank the smaller class index first."""
    probs = _check_probs(predicted_probs)
    labels = _check_labels(true_labels, probs.shape[1])
    if not 1 <= k <= probs.shape[1]:
        raise ConfigError(f"k must lie in 1..{probs.shape[1]}")
    # stable argsort of -p keeps ascending class index within ties
    order = np.argsort(-probs, axis=1, kind="stable")[:, :k]
    hits = np.any(order == (labels - 1)[:, None], axis=1)
    return float(hits.mean())


def evaluate(true_labels, predicted_labels, predicted_probs=None,
             top_k=None, n: int = None) -> EvaluationReport:
    """Bundle the individual scores into one report."""
    m = confusion_matrix(true_labels, predicted_labels, n)
    p, r, f1 = weighted_prf(true_labels, predicted_labels, len(m))
    ll = pl = float("nan")
    tk = None
    if predicted_probs is not None:
        ll = log_loss(true_labels, predicted_probs)
        pl = proba_loss(true_labels, predicted_probs)
        if top_k:
            tk = {k: top_k_accuracy(true_labels, predicted_probs, k) for k in top_k}
    return EvaluationReport(
        accuracy=accuracy(true_labels, predicted_labels),
        log_loss=ll, proba_loss=pl,
        precision_weighted=p, recall_weighted=r, f1_weighted=f1,
        confusion=m, top_k=tk)


def calibration_curve(true_binary, predicted_prob_class1) -> CalibrationCurve:
    """Reliability bins for a binary problem.

    ``true_binary`` holds 1 where the true class is class 1.  Bin edges are
    [0, 0.1), ..., [0.9, 1.0]; empty bins are omitted.
    """
    p = np.asarray(predicted_prob_class1, dtype=float)
    t = np.asarray(true_binary, dtype=float)
    if p.ndim != 1 or p.shape != t.shape:
        raise DataError("need matching 1-d probability and indicator arrays")
    if np.any((p < 0) | (p > 1)):
        raise DataError("probabilities must lie in [0, 1]")
    idx = np.minimum((p * 10).astype(int), 9)
    bins = []
    for b in range(10):
        mask = idx == b
        count = int(mask.sum())
        if count == 0:
            continue
        bins.append((float(p[mask].mean()), float(t[mask].mean()), count))
    return CalibrationCurve(bins=tuple(bins))


def area_deviation(curve: CalibrationCurve) -> float:
    """Area between the piecewise-linear calibration curve and the diagonal,
    over the curve's x-extent.  Segments are split at diagonal crossings so
    each trapezoid integrates |y - x| exactly."""
    pts = [(m, f) for m, f, _ in curve.bins]
    if len(pts) < 2:
        return 0.0
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        g0 = y0 - x0
        g1 = y1 - x1
        if x1 == x0:
            continue
        if g0 * g1 < 0:
            xc = x0 + (x1 - x0) * g0 / (g0 - g1)
            area += 0.5 * abs(g0) * (xc - x0) + 0.5 * abs(g1) * (x1 - xc)
        else:
            area += 0.5 * (abs(g0) + abs(g1)) * (x1 - x0)
    return float(area)
