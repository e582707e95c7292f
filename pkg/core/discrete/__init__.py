"""Finite-category identification and partial-identification bounds."""

from core.discrete.bounds import (
    FrechetBound,
    GaussianLinearBound,
    expected_outcome,
    frechet_bound,
    frechet_witness,
    gaussian_linear_bound,
    whitened_bridge,
)
from core.discrete.identification import (
    BridgeMatrix,
    bridge_matrix_concept,
    bridge_matrix_concept_marginal,
    bridge_matrix_multidomain,
    non_identification_witness,
    total_variation,
)
from core.discrete.tables import DiscreteModel, check_stochastic, empirical_table, random_stochastic

__all__ = [
    "BridgeMatrix",
    "DiscreteModel",
    "FrechetBound",
    "GaussianLinearBound",
    "bridge_matrix_concept",
    "bridge_matrix_concept_marginal",
    "bridge_matrix_multidomain",
    "check_stochastic",
    "empirical_table",
    "expected_outcome",
    "frechet_bound",
    "frechet_witness",
    "gaussian_linear_bound",
    "non_identification_witness",
    "random_stochastic",
    "total_variation",
    "whitened_bridge",
]
