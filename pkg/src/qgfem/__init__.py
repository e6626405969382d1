"""C1-conforming (Bogner-Fox-Schmit) finite elements for the clamped quasi-geostrophic equation."""

__version__ = "0.1.0"

from .assembly import Discretization, build_discretization
from .errors import (
    AssemblyError,
    ConfigurationError,
    DivergedStateError,
    LinearSolveError,
    StepFailure,
)
from .mesh import build_dofmap, build_mesh
from .problems import ProblemSpec, SolverConfig, scenario
from .timestepper import State, Stepper, initial_state, run

__all__ = [
    "AssemblyError",
    "ConfigurationError",
    "Discretization",
    "DivergedStateError",
    "LinearSolveError",
    "ProblemSpec",
    "SolverConfig",
    "State",
    "StepFailure",
    "Stepper",
    "build_discretization",
    "build_dofmap",
    "build_mesh",
    "initial_state",
    "run",
    "scenario",
]
