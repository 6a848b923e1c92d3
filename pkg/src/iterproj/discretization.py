"""Bundle of mesh, dof layout, static matrices and cached solvers for one run."""
from __future__ import annotations

from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .assembly import Assembler, apply_dirichlet, lift
from .mesh import Mesh
from .sparse import DirectSolver, IlutGmres, pcg
from .spaces import DofLayout, make_layout


class Discretization:
    def __init__(self, mesh: Mesh, boundary_velocity=None, layout: DofLayout | None = None):
        self.mesh = mesh
        self.layout = layout or make_layout(mesh, boundary_velocity)
        self.assembler = Assembler(mesh)
        self.geo = self.assembler.geo
        self.matrices = self.assembler.assemble_static()
        self.ones_p = np.ones(mesh.n_nodes)
        self.mass_weights = self.matrices.M @ self.ones_p
        self.volume = float(self.mass_weights.sum())

    @classmethod
    def for_problem(cls, problem, N: int) -> "Discretization":
        return cls(problem.build_mesh(N), problem.boundary_velocity)

    @property
    def n_velocity(self) -> int:
        return self.layout.n_velocity

    @property
    def n_pressure(self) -> int:
        return self.layout.n_pressure

    def remove_mean(self, p: np.ndarray) -> np.ndarray:
        """Subtract the mass-weighted mean so that (p, 1) = 0."""
        return p - (self.mass_weights @ p) / self.volume

    def mean(self, p: np.ndarray) -> float:
        return float(self.mass_weights @ p) / self.volume

    def pressure_l2(self, p: np.ndarray) -> float:
        return float(np.sqrt(max(p @ (self.matrices.M @ p), 0.0)))

    def velocity_l2_sq(self, u: np.ndarray) -> float:
        return float(u @ (self.matrices.A0 @ u))

    def solve_mass(self, b: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        y, rep = pcg(self.matrices.M, b, tol=tol)
        return y

    @cached_property
    def lifting(self) -> np.ndarray:
        return lift(self.layout)

    def constrained(self, A: sp.spmatrix, solver: str = "gmres", **opts) -> "ConstrainedSolve":
        return ConstrainedSolve(A, self.layout, solver, **opts)


class ConstrainedSolve:
    """Momentum operator with Dirichlet elimination and a cached factorisation."""

    def __init__(self, A, layout: DofLayout, solver: str = "gmres", fill=10.0, drop=1e-4,
                 restart=50):
        self.A = sp.csr_matrix(A)
        self.layout = layout
        self.g = lift(layout)
        self.Ac, _ = apply_dirichlet(self.A, np.zeros(self.A.shape[0]), layout)
        if solver == "gmres":
            self.solver = IlutGmres(self.Ac, fill=fill, drop=drop, restart=restart)
        elif solver == "direct":
            self.solver = DirectSolver(self.Ac)
        else:
            raise ValueError(f"unknown linear solver {solver!r}")
        self._Ag = self.A @ self.g

    def rhs(self, b: np.ndarray) -> np.ndarray:
        r = b - self._Ag
        r[self.layout.dirichlet_mask] = self.g[self.layout.dirichlet_mask]
        return r

    def solve(self, b: np.ndarray, tol: float = 1e-10, max_iters: int = 500, x0=None):
        return self.solver.solve(self.rhs(b), tol=tol, max_iters=max_iters, x0=x0)
