"""Spectral laboratory for dual Schrodinger eigenproblems on the flat torus.

Solves the tilted operator and its adjoint, builds the Cole-Hopf fields,
checks the effective Hamiltonian's derivatives, and evaluates second
variations of the polar action.
"""

from .colehopf_fields import ColeHopfFields, from_dual_solution, residual_suite
from .dual_eigensolver import DualEigenSolution, SchrodingerParams, principal_eigenpair
from .effective_hamiltonian import gradient_check, hessian_check, invert_v, midpoint_convexity, scan
from .errors import (
    BudgetError,
    ConfigError,
    ConvergenceError,
    DimError,
    DomainError,
    GMTorusError,
    NonrealError,
    PositivityError,
    RangeError,
    SolverError,
    SpecError,
)
from .potential import PotentialSpec, realize
from .spectral_field import GridSpec, ScalarField, VectorField
from .variational import QuantumState, VariationDirection, harmonic_oscillator_check

__version__ = "0.1.0"

__all__ = [
    "BudgetError", "ColeHopfFields", "ConfigError", "ConvergenceError", "DimError", "DomainError",
    "DualEigenSolution", "GMTorusError", "GridSpec", "NonrealError", "PositivityError", "PotentialSpec",
    "QuantumState", "RangeError", "ScalarField", "SchrodingerParams", "SolverError", "SpecError",
    "VariationDirection", "VectorField", "from_dual_solution", "gradient_check", "harmonic_oscillator_check",
    "hessian_check", "invert_v", "midpoint_convexity", "principal_eigenpair", "realize", "residual_suite", "scan",
]
