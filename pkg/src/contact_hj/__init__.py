"""Numerical laboratory for contact Hamilton-Jacobi equations.

Semi-Lagrangian fixed-point solvers for H(x, Du, lambda*u) = c, backward
minimizing-curve tracing with exponential discount indices, discounted
occupation measures, and the experiment drivers built on top of them.
"""

__version__ = "0.1.0"

from .experiments import ExperimentConfig, builtin_models
from .grid import Domain, GridField, UniformGrid
from .hamiltonian import (
    HamiltonianModel,
    LagrangianEvaluator,
    check_assumptions,
)
from .solver import ControlSet, SolveParams

__all__ = ["HamiltonianModel", "LagrangianEvaluator", "check_assumptions",
           "Domain", "UniformGrid", "GridField", "ControlSet", "SolveParams",
           "ExperimentConfig", "builtin_models", "__version__"]
