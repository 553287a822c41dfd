"""Exact alignment of partially correlated random graphs."""

from .cumulants import CumulantQuery, ScoreKind
from .estimators import AlignmentResult, ResourceError, branch_and_bound_align, brute_force_align, penalized_align
from .kernels import BACKEND_NAME
from .models import DomainError, InjectiveMapping, ModelKind, ModelParams, WeightedGraph, sample_instance

__version__ = "0.1.0"

__all__ = [
    "AlignmentResult",
    "BACKEND_NAME",
    "CumulantQuery",
    "DomainError",
    "InjectiveMapping",
    "ModelKind",
    "ModelParams",
    "ResourceError",
    "ScoreKind",
    "WeightedGraph",
    "branch_and_bound_align",
    "brute_force_align",
    "penalized_align",
    "sample_instance",
]
