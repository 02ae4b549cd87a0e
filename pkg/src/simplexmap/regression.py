"""Regression backends mapping feature space into the latent space.

The built-in backend is a Gaussian-process regressor with a Matern plus
white-noise kernel, fitted independently per latent dimension by maximizing
the log marginal likelihood over (length_scale, signal_variance,
noise_variance) in log space with a multi-restart quasi-Newton search.
Predictions are diagonal normals; the predictive variance includes the
white-noise term.

Alternative backends can be registered by name; they must provide
``fit(inputs, targets, seed) -> fitted`` where the fitted object offers
``predict_mean`` and ``predict_density``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import minimize

from .errors import ConfigError, NumericalError

_SUPPORTED_NU = (0.5, 1.5, 2.5)


@dataclass(frozen=True)
class PredictiveDensity:
    """Independent normal per latent dimension."""

    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class GprConfig:
    matern_nu: float = 2.5
    length_scale: float = 1.0
    length_scale_bounds: tuple = (1e-2, 1e3)
    signal_variance: float = 1.0
    signal_variance_bounds: tuple = (1e-3, 1e3)
    noise_variance: float = 1e-2
    noise_variance_bounds: tuple = (1e-10, 1e1)
    restarts: int = 4
    jitter: float = 1e-10

    def __post_init__(self):
        if self.matern_nu not in _SUPPORTED_NU:
            raise ConfigError(f"matern_nu must be one of {_SUPPORTED_NU}")
        for init, (lo, hi), name in (
            (self.length_scale, self.length_scale_bounds, "length_scale"),
            (self.signal_variance, self.signal_variance_bounds, "signal_variance"),
            (self.noise_variance, self.noise_variance_bounds, "noise_variance"),
        ):
            if not (0 < lo <= init <= hi):
                raise ConfigError(f"{name} bounds must be positive and contain the initial value")
        if self.restarts < 0:
            raise ConfigError("restarts must be >= 0")
        if self.jitter <= 0:
            raise ConfigError("jitter must be positive")


def noise_free(cfg: GprConfig = None, pin: float = 1e-10) -> GprConfig:
    """Variant of ``cfg`` with the noise variance pinned at ``pin`` so the
    fitted mean interpolates the targets."""
    base = cfg or GprConfig()
    return GprConfig(
        matern_nu=base.matern_nu,
        length_scale=base.length_scale,
        length_scale_bounds=base.length_scale_bounds,
        signal_variance=base.signal_variance,
        signal_variance_bounds=base.signal_variance_bounds,
        noise_variance=pin,
        noise_variance_bounds=(pin, pin),
        restarts=base.restarts,
        jitter=base.jitter,
    )


# ---------------------------------------------------------------------------
# kernel

def matern_kernel(r, nu: float, length_scale: float, signal_variance: float):
    """Matern covariance at distance ``r`` for half-integer nu."""
    t = np.asarray(r, dtype=float) / length_scale
    if nu == 0.5:
        k = np.exp(-t)
    elif nu == 1.5:
        u = math.sqrt(3.0) * t
        k = (1.0 + u) * np.exp(-u)
    elif nu == 2.5:
        u = math.sqrt(5.0) * t
        k = (1.0 + u + u * u / 3.0) * np.exp(-u)
    else:
        raise ConfigError(f"unsupported matern_nu={nu}; use one of {_SUPPORTED_NU}")
    return signal_variance * k


def _matern_dlog_length(r, nu, length_scale, signal_variance):
    """d k / d log(length_scale) at distance r."""
    t = np.asarray(r, dtype=float) / length_scale
    if nu == 0.5:
        g = t * np.exp(-t)
    elif nu == 1.5:
        g = 3.0 * t * t * np.exp(-math.sqrt(3.0) * t)
    else:  # 2.5
        g = (5.0 / 3.0) * t * t * (1.0 + math.sqrt(5.0) * t) * np.exp(-math.sqrt(5.0) * t)
    return signal_variance * g


def _pairwise_dist(a, b):
    d = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.sum(d * d, axis=2))


# ---------------------------------------------------------------------------
# marginal likelihood

def _chol_with_jitter(k_noisy, jitter):
    """Cholesky of k_noisy + jitter*I, escalating jitter x10 up to 3 retries."""
    j = jitter
    for _ in range(4):
        try:
            return linalg.cho_factor(k_noisy + j * np.eye(len(k_noisy)), lower=True), j
        except linalg.LinAlgError:
            j *= 10.0
    raise NumericalError(
        f"kernel matrix not positive definite after jitter escalation to {j / 10.0:g}"
    )


def log_marginal_likelihood(inputs, targets, nu, length_scale, signal_variance,
                            noise_variance, jitter=1e-10):
    """Evidence of a single-output GP and its gradient.

    Returns ``(lml, grad)`` where grad is w.r.t. the logs of
    (length_scale, signal_variance, noise_variance).
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float)
    d = len(y)
    r = _pairwise_dist(x, x)
    k_signal = matern_kernel(r, nu, length_scale, signal_variance)
    (cf, lower), _ = _chol_with_jitter(k_signal + noise_variance * np.eye(d), jitter)
    alpha = linalg.cho_solve((cf, lower), y)
    lml = (-0.5 * float(y @ alpha)
           - float(np.sum(np.log(np.diag(cf))))
           - 0.5 * d * math.log(2.0 * math.pi))
    k_inv = linalg.cho_solve((cf, lower), np.eye(d))
    inner = np.outer(alpha, alpha) - k_inv
    dk = (
        _matern_dlog_length(r, nu, length_scale, signal_variance),
        k_signal,                     # d/d log signal_variance
        noise_variance * np.eye(d),   # d/d log noise_variance
    )
    grad = np.array([0.5 * np.sum(inner * dki) for dki in dk])
    return lml, grad


# ---------------------------------------------------------------------------
# fitting

@dataclass(frozen=True)
class DimensionFit:
    length_scale: float
    signal_variance: float
    noise_variance: float
    jitter: float
    lml: float
    alpha: np.ndarray = field(repr=False)
    chol: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class FittedGpr:
    """Per-dimension GP posteriors over the latent space."""

    inputs: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)
    nu: float = 2.5
    dims: tuple = ()

    @property
    def out_dim(self) -> int:
        return len(self.dims)

    def _cross(self, x, dim: DimensionFit):
        return matern_kernel(_pairwise_dist(x, self.inputs), self.nu,
                             dim.length_scale, dim.signal_variance)

    def predict_mean(self, x) -> np.ndarray:
        x, single = _as_batch(x, self.inputs.shape[1])
        out = np.empty((len(x), self.out_dim))
        for j, dim in enumerate(self.dims):
            out[:, j] = self._cross(x, dim) @ dim.alpha
        return out[0] if single else out

    def predict_density(self, x) -> PredictiveDensity:
        x, single = _as_batch(x, self.inputs.shape[1])
        mean = np.empty((len(x), self.out_dim))
        var = np.empty((len(x), self.out_dim))
        for j, dim in enumerate(self.dims):
            ks = self._cross(x, dim)
            mean[:, j] = ks @ dim.alpha
            v = linalg.cho_solve((dim.chol, True), ks.T)
            prior = dim.signal_variance + dim.noise_variance
            var[:, j] = np.maximum(prior - np.sum(ks * v.T, axis=1), 1e-12)
        std = np.sqrt(var)
        if single:
            return PredictiveDensity(mean=mean[0], std=std[0])
        return PredictiveDensity(mean=mean, std=std)


def _as_batch(x, expected_dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if len(x) != expected_dim:
            raise ConfigError(f"expected {expected_dim} features, got {len(x)}")
        return x[None, :], True
    if x.shape[1] != expected_dim:
        raise ConfigError(f"expected {expected_dim} features, got {x.shape[1]}")
    return x, False


def _optimize_dimension(x, y, cfg: GprConfig, rng) -> DimensionFit:
    log_bounds = [
        tuple(np.log(cfg.length_scale_bounds)),
        tuple(np.log(cfg.signal_variance_bounds)),
        tuple(np.log(cfg.noise_variance_bounds)),
    ]
    start = np.log([cfg.length_scale, cfg.signal_variance, cfg.noise_variance])
    starts = [start]
    for _ in range(cfg.restarts):
        starts.append(np.array([rng.uniform(lo, hi) for lo, hi in log_bounds]))

    def objective(theta):
        lml, grad = log_marginal_likelihood(
            x, y, cfg.matern_nu, *np.exp(theta), jitter=cfg.jitter)
        return -lml, -grad

    best = None
    for s in starts:
        res = minimize(objective, s, jac=True, method="L-BFGS-B", bounds=log_bounds)
        if best is None or res.fun < best.fun:
            best = res
    ell, sf2, sn2 = np.exp(best.x)
    r = _pairwise_dist(x, x)
    k = matern_kernel(r, cfg.matern_nu, ell, sf2) + sn2 * np.eye(len(y))
    (cf, _), jitter_used = _chol_with_jitter(k, cfg.jitter)
    alpha = linalg.cho_solve((cf, True), y)
    return DimensionFit(length_scale=float(ell), signal_variance=float(sf2),
                        noise_variance=float(sn2), jitter=jitter_used,
                        lml=float(-best.fun), alpha=alpha, chol=cf)


def fit_gpr(inputs, targets, cfg: GprConfig = None, seed: int = 0) -> FittedGpr:
    """Fit one GP per output dimension.

    Restart draws come from per-dimension substreams derived from
    ``(seed, dim)``, so schedules (serial or parallel) cannot change the
    selected hyperparameters.
    """
    cfg = cfg or GprConfig()
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if len(x) != len(y) or len(y) == 0:
        raise ConfigError("inputs and targets must be nonempty and the same length")
    dims = tuple(
        _optimize_dimension(x, y[:, j], cfg, np.random.default_rng([seed, j]))
        for j in range(y.shape[1])
    )
    return FittedGpr(inputs=x, targets=y, nu=cfg.matern_nu, dims=dims)


def refit_gpr(inputs, targets, nu, dim_params) -> FittedGpr:
    """Rebuild a fitted GP from stored hyperparameters (no re-optimization).

    ``dim_params`` is a sequence of dicts with keys length_scale,
    signal_variance, noise_variance, jitter.  Factorization is deterministic,
    so predictions match the original fit bitwise.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float)
    r = _pairwise_dist(x, x)
    dims = []
    for j, p in enumerate(dim_params):
        k = matern_kernel(r, nu, p["length_scale"], p["signal_variance"])
        k = k + (p["noise_variance"] + p["jitter"]) * np.eye(len(y))
        try:
            cf, _ = linalg.cho_factor(k, lower=True)
        except linalg.LinAlgError:
            raise NumericalError(f"stored kernel for dimension {j} is not positive definite")
        alpha = linalg.cho_solve((cf, True), y[:, j])
        dims.append(DimensionFit(
            length_scale=p["length_scale"], signal_variance=p["signal_variance"],
            noise_variance=p["noise_variance"], jitter=p["jitter"],
            lml=p.get("lml", float("nan")), alpha=alpha, chol=cf))
    return FittedGpr(inputs=x, targets=y, nu=nu, dims=tuple(dims))


# ---------------------------------------------------------------------------
# backend registry

class GprBackend:
    """Default regression backend; ``name`` appears in saved models."""

    name = "gpr"

    def __init__(self, cfg: GprConfig = None):
        self.cfg = cfg or GprConfig()

    def fit(self, inputs, targets, seed: int) -> FittedGpr:
        return fit_gpr(inputs, targets, self.cfg, seed)

    @staticmethod
    def fitted_state(fitted: FittedGpr) -> dict:
        return {
            "nu": fitted.nu,
            "dims": [
                {"length_scale": d.length_scale, "signal_variance": d.signal_variance,
                 "noise_variance": d.noise_variance, "jitter": d.jitter, "lml": d.lml}
                for d in fitted.dims
            ],
        }

    @staticmethod
    def restore(inputs, targets, state: dict) -> FittedGpr:
        return refit_gpr(inputs, targets, state["nu"], state["dims"])


_BACKENDS = {"gpr": GprBackend}


def register_backend(name: str, factory) -> None:
    """Register an alternative regression backend factory under ``name``."""
    _BACKENDS[name] = factory


def get_backend(name: str):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ConfigError(f"unknown regression backend {name!r}") from None
