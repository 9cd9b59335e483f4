"""Learning acyclic directed mixed graphs from linear Gaussian data.

The package fits linear structural equation models with correlated errors
while driving a differentiable penalty to zero, so that the support of the
fitted coefficient matrices lands inside a chosen graph class (ancestral,
arid, or bow-free ADMGs).
"""

from .graphs import (
    Admg,
    GenerationError,
    GraphClass,
    GraphError,
    check_properties,
    inducing_path_exists,
    mag_projection,
    primal_fix,
    primal_fixable,
    random_admg,
    reachable,
)
from .penalties import (
    PenaltyConfig,
    PenaltyMode,
    acyclicity_penalty,
    ancestrality_penalty,
    arid_penalty,
    bow_penalty,
    class_penalty,
    class_penalty_gradient,
    greenery,
)
from .sem import (
    Dataset,
    SemParams,
    gaussian_neg2_loglik,
    implied_covariance,
    random_parameters,
    sample_data,
    standardize,
    verma_residual,
)
from .scores import ScoreConfig, abic, bic
from .ricf import OptimizationError, RicfResult, regularized_ricf
from .discovery import (
    DiscoveryError,
    DiscoveryResult,
    Hyperparams,
    discover,
    threshold_to_graph,
)
from .metrics import MetricsReport, compare_graphs, endpoint_metrics, skeleton_metrics

__version__ = "0.1.0"

__all__ = [
    "Admg",
    "Dataset",
    "DiscoveryError",
    "DiscoveryResult",
    "GenerationError",
    "GraphClass",
    "GraphError",
    "Hyperparams",
    "MetricsReport",
    "OptimizationError",
    "PenaltyConfig",
    "PenaltyMode",
    "RicfResult",
    "ScoreConfig",
    "SemParams",
    "abic",
    "acyclicity_penalty",
    "ancestrality_penalty",
    "arid_penalty",
    "bic",
    "bow_penalty",
    "check_properties",
    "class_penalty",
    "class_penalty_gradient",
    "compare_graphs",
    "discover",
    "endpoint_metrics",
    "gaussian_neg2_loglik",
    "greenery",
    "implied_covariance",
    "inducing_path_exists",
    "mag_projection",
    "primal_fix",
    "primal_fixable",
    "random_admg",
    "random_parameters",
    "reachable",
    "regularized_ricf",
    "sample_data",
    "skeleton_metrics",
    "standardize",
    "threshold_to_graph",
    "verma_residual",
]
