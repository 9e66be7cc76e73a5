"""Affine sampling-without-replacement designs and their Horvitz-Thompson variance."""

from .coeffs import CoeffPair, DomainError, coeff_pair, verify_identities
from .design import (
    AffineDesign,
    InfeasibleDesign,
    ProbabilityVector,
    SubsetWeight,
    build_design,
    existence_check,
)
from .polytope import PolytopeVertex, VertexKind, facets, membership, vertices
from .sampler import StratifiedPopulation, StratifiedSampler, bound_c
from .variance import (
    PopulationValues,
    SpectralReport,
    Verdict,
    gamma_matrix,
    psi_matrix,
    symmetric_eigenvalues,
    variance_with_replacement,
    variance_without_replacement,
)

__all__ = [
    "AffineDesign",
    "CoeffPair",
    "DomainError",
    "InfeasibleDesign",
    "PolytopeVertex",
    "PopulationValues",
    "ProbabilityVector",
    "SpectralReport",
    "StratifiedPopulation",
    "StratifiedSampler",
    "SubsetWeight",
    "Verdict",
    "VertexKind",
    "bound_c",
    "build_design",
    "coeff_pair",
    "existence_check",
    "facets",
    "gamma_matrix",
    "membership",
    "psi_matrix",
    "symmetric_eigenvalues",
    "variance_with_replacement",
    "variance_without_replacement",
    "verify_identities",
    "vertices",
]
