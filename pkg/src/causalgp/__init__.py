"""Gaussian-process treatment-effect estimation under hidden confounding.

Two estimators share a two-stage structure: an instrumental-variable
posterior (``gpiv``) and a proxy-variable posterior (``gpproxy``), each with
a matching frequentist point-estimate baseline (``baselines``).  Supporting
modules cover kernels, robust PSD linear algebra, marginal-likelihood
tuning, data generation, uncertainty evaluation, variance-driven data
acquisition, the benchmark runner, and SVG plotting.
"""

from .active import AcquisitionRun, run_acquisition
from .baselines import div_mean, dproxy_mean
from .datagen import FAMILIES, DesignSpec, GroundTruth, generate
from .evaluation import (
    ArcCurve,
    PredictionSet,
    auc_arc,
    bootstrap_variance,
    coverage95,
    delta_arc,
    mse,
    normalized_mse,
    wilcoxon_signed_rank,
)
from .gpiv import FittedGPIV, IVDataset, IVHyperparams, fit_gpiv, fit_gpiv_split
from .gpproxy import (
    FittedGPProxy,
    ProxyDataset,
    ProxyHyperparams,
    fit_gpproxy,
    fit_gpproxy_split,
)
from .runner import ExperimentConfig, run_benchmark, run_replication

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AcquisitionRun",
    "ArcCurve",
    "DesignSpec",
    "ExperimentConfig",
    "FAMILIES",
    "FittedGPIV",
    "FittedGPProxy",
    "GroundTruth",
    "IVDataset",
    "IVHyperparams",
    "PredictionSet",
    "ProxyDataset",
    "ProxyHyperparams",
    "auc_arc",
    "bootstrap_variance",
    "coverage95",
    "delta_arc",
    "div_mean",
    "dproxy_mean",
    "fit_gpiv",
    "fit_gpiv_split",
    "fit_gpproxy",
    "fit_gpproxy_split",
    "generate",
    "mse",
    "normalized_mse",
    "run_acquisition",
    "run_benchmark",
    "run_replication",
    "wilcoxon_signed_rank",
]
