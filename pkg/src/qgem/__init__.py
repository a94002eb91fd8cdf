"""Simulation of gravitationally induced entanglement between two qudits.

Each mass sits in a superposition of ``D`` positions; gravity imprints a
position-dependent phase on every pair of instances. The package computes
the resulting entanglement, builds witnesses, splits them into measurable
terms and simulates finite-shot measurement campaigns.
"""

from .basis import (
    CommutationGraph,
    MeasurementGroup,
    NumericalError,
    WitnessDecomposition,
    commutation_graph,
    decompose_witness,
    gell_mann_basis,
    group_terms_ldfc,
    joint_eigenbasis,
)
from .config import ConfigError, ExperimentConfig
from .entanglement import (
    UnsupportedStateError,
    Witness,
    build_ppt_witness,
    build_vicinity_witness,
    build_witness,
    entanglement_entropy,
    partial_trace,
    partial_transpose,
    witness_expectation,
)
from .geometry import DistanceMatrix, GeometryError, distance_matrix, validate_geometry
from .io import RunManifest, __version__
from .shots import BudgetError, allocate_shots, prepare_campaign, run_trial
from .states import apply_decoherence, density_matrix, final_state, pure_state
from .sweeps import Grid, SweepSpec, crossing_budget, measurement_curve

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
