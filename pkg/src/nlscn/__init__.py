"""Conservative Crank-Nicolson finite element solver for 2-D nonlinear
Schrodinger equations.

The package provides

* P1 finite elements on structured triangulations of a rectangle
  (Dirichlet or periodic),
* the energy-difference-quotient Crank-Nicolson time stepper with a
  precomputed-LU fixed-point solver,
* a normalized-gradient-flow ground-state eigensolver,
* a second-order Strang-splitting Fourier integrator for periodic
  reference runs,
* drivers that reproduce conservation, convergence-order and
  method-comparison experiments from JSON configs (see ``nlscn.cli``).
"""

__version__ = "0.1.0"

from . import errors
from .nonlinearity import NonlinearityModel, gamma_quotient, validate_model
from .mesh import RectMesh, build_mesh, eval_p1, restrict_nested
from .stepper import CNConfig, CNState, build_operators, evolve, fixed_point_step
from .groundstate import GroundStateResult, compute_ground_state

__all__ = [
    "errors",
    "NonlinearityModel",
    "gamma_quotient",
    "validate_model",
    "RectMesh",
    "build_mesh",
    "eval_p1",
    "restrict_nested",
    "CNConfig",
    "CNState",
    "build_operators",
    "evolve",
    "fixed_point_step",
    "GroundStateResult",
    "compute_ground_state",
]
