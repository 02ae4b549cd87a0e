"""Feature preprocessing fitted on training data only."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray
    scale: np.ndarray


def standardize_fit(features) -> Standardization:
    """Per-feature z-score parameters; zero-variance features get scale 1."""
    x = np.asarray(features, dtype=float)
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return Standardization(mean=mean, scale=scale)


def standardize_apply(scaler: Standardization, features) -> np.ndarray:
    return (np.asarray(features, dtype=float) - scaler.mean) / scaler.scale


@dataclass(frozen=True)
class MinMaxScaling:
    low: np.ndarray
    span: np.ndarray


def minmax_fit(features) -> MinMaxScaling:
    """Per-feature min-max parameters; zero-range features map to 0."""
    x = np.asarray(features, dtype=float)
    low = x.min(axis=0)
    span = x.max(axis=0) - low
    span = np.where(span == 0.0, 1.0, span)  # constant column -> (x - low)/1 = 0
    return MinMaxScaling(low=low, span=span)


def minmax_apply(scaler: MinMaxScaling, features) -> np.ndarray:
    return (np.asarray(features, dtype=float) - scaler.low) / scaler.span
