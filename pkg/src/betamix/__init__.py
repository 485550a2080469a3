"""Clustering with a mixture of flexible bivariate beta distributions.

Submodules
----------
bbeta      the component distribution (log density, sampling, moments)
optim      bound-constrained maximizer used by the M-step
emfit      the mixture model: EM fitting, prediction, sampling, (de)serialization
metrics    clustering accuracy, adjusted Rand index, adjusted mutual information
data       synthetic benchmark generators, CSV ingestion, normalization, PCA
baselines  k-means and Gaussian-mixture reference clusterers
cli        the ``betamix`` command line front end
"""

from betamix.bbeta import (
    ALPHA_MAX,
    ALPHA_MIN,
    BetaParams,
    Point2,
    QuadratureConfig,
    QuadratureError,
)
from betamix.emfit import DataMatrix, FitConfig, FitTrace, MixtureModel, Responsibilities

__version__ = "0.1.0"

__all__ = [
    "ALPHA_MAX",
    "ALPHA_MIN",
    "BetaParams",
    "DataMatrix",
    "FitConfig",
    "FitTrace",
    "MixtureModel",
    "Point2",
    "QuadratureConfig",
    "QuadratureError",
    "Responsibilities",
    "__version__",
]
