"""Iterative pressure projection for incompressible Navier-Stokes.

Taylor-Hood P2/P1 elements on tetrahedral box meshes, BDF2 in time, and a
per-step fixed-point iteration that interpolates between pressure-correction
projection and Uzawa.
"""
from .config import RunConfig, load_config
from .discretization import Discretization
from .march import SimulationResult, TimeState, run_simulation
from .mesh import Mesh, build_gauss_lobatto_mesh, build_uniform_cube_mesh
from .problems import ProblemSpec, cavity_spec, get_problem, problem1_spec
from .projector import ProjectionSolver, SolverParams, scheme_preset

__all__ = [
    "Discretization", "Mesh", "ProblemSpec", "ProjectionSolver", "RunConfig", "SimulationResult",
    "SolverParams", "TimeState", "build_gauss_lobatto_mesh", "build_uniform_cube_mesh",
    "cavity_spec", "get_problem", "load_config", "problem1_spec", "run_simulation",
    "scheme_preset",
]
__version__ = "0.1.0"
