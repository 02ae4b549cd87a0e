"""Calibrated multi-class classification via a simplex-segmented latent space."""

__version__ = "0.1.0"

from .classifier import (McConfig, SimplexMapModel, fit, predict,
                         predict_latent, predict_latent_mean, predict_proba)
from .errors import ConfigError, DataError, NumericalError, SimplexMapError
from .geometry import (SimplexGeometry, barycentric, build_simplex,
                       compress, cone_membership_oracle, decompress,
                       nearest_vertex_label)
from .regression import (FittedGpr, GprBackend, GprConfig, PredictiveDensity,
                         fit_gpr, log_marginal_likelihood, matern_kernel,
                         noise_free, register_backend)
from .transform import (LabeledDataset, LatentDataset, Semimetric,
                        TransformConfig, attraction, gamma_config,
                        mean_knn_distance, register_semimetric, repulsion,
                        transform_dataset, transform_point)

__all__ = [
    "__version__",
    "McConfig", "SimplexMapModel", "fit", "predict", "predict_proba",
    "predict_latent", "predict_latent_mean",
    "SimplexMapError", "ConfigError", "DataError", "NumericalError",
    "SimplexGeometry", "build_simplex", "nearest_vertex_label",
    "cone_membership_oracle", "compress", "decompress", "barycentric",
    "FittedGpr", "GprBackend", "GprConfig", "PredictiveDensity",
    "fit_gpr", "log_marginal_likelihood", "matern_kernel", "noise_free",
    "register_backend",
    "LabeledDataset", "LatentDataset", "Semimetric", "TransformConfig",
    "attraction", "repulsion", "mean_knn_distance", "gamma_config",
    "register_semimetric", "transform_dataset", "transform_point",
]
