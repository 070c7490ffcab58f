"""Nominal distribution, uncertainty set, Sinkhorn distance and worst-case group weights
"""
from .exceptions import (
    ClusteringError,
    DroError,
    InfeasibleRadiusError,
    NominalSelectionError,
    SinkhornConvergenceError,
    WeightDomainError,
)
from .kmeans import UncertaintySet, kmeans
from .nominal import NominalDistribution, build_nominal, select_central_nodes
from .sinkhorn import PointCloud, SinkhornResult, cost_matrix, sinkhorn_distance, sinkhorn_plan
from .weights import (
    KL_INFINITE,
    GroupLosses,
    WeightUpdate,
    check_simplex,
    entropy,
    entropy_grad,
    group_losses,
    kl_blowup_demo,
    kl_divergence,
    kl_dro_weights,
    tempered_weights,
    worst_case_weights,
    write_weight_trajectory,
)

__all__ = [
    "ClusteringError",
    "DroError",
    "GroupLosses",
    "InfeasibleRadiusError",
    "KL_INFINITE",
    "NominalDistribution",
    "NominalSelectionError",
    "PointCloud",
    "SinkhornConvergenceError",
    "SinkhornResult",
    "UncertaintySet",
    "WeightDomainError",
    "WeightUpdate",
    "build_nominal",
    "check_simplex",
    "cost_matrix",
    "entropy",
    "entropy_grad",
    "group_losses",
    "kl_blowup_demo",
    "kl_divergence",
    "kl_dro_weights",
    "kmeans",
    "select_central_nodes",
    "sinkhorn_distance",
    "sinkhorn_plan",
    "tempered_weights",
    "worst_case_weights",
    "write_weight_trajectory",
]
