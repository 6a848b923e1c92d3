"""Taylor-Hood P2/P1 machinery on the reference tetrahedron.

Reference vertices are (0,0,0), (1,0,0), (0,1,0), (0,0,1). Velocity dofs are
numbered scalar-node-major: dof ``3*a + c`` is component ``c`` at P2 node ``a``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import permutations

import numpy as np

from .mesh import LOCAL_EDGES, Mesh


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, 3) reference coordinates
    weights: np.ndarray  # (nq,), sum 1/6


def _orbit4(a):
    b = 1.0 - 3.0 * a
    return [tuple(b if i == j else a for j in range(4)) for i in range(4)]


def _orbit12(a, b, c):
    return sorted(set(permutations((a, a, b, c))))


# Keast's 24-point rule, degree 6; barycentric orbits and weights
_KEAST24 = (
    (_orbit4(0.2146028712591517), 0.6653791709694646e-02),
    (_orbit4(0.4067395853461135e-01), 0.1679535175886775e-02),
    (_orbit4(0.3223378901422757), 0.9226196923942399e-02),
    (_orbit12(0.6366100187501752e-01, 0.2696723314583159, 0.6030056647916491),
     0.8035714285714285e-02),
)


def keast_quadrature() -> QuadratureRule:
    bary, w = [], []
    for orbit, weight in _KEAST24:
        bary.extend(orbit)
        w.extend([weight] * len(orbit))
    bary = np.array(bary)
    return QuadratureRule(points=bary[:, 1:].copy(), weights=np.array(w))


def _barycentric(pts):
    pts = np.atleast_2d(np.asarray(pts, float))
    lam = np.empty((len(pts), 4))
    lam[:, 0] = 1.0 - pts.sum(axis=1)
    lam[:, 1:] = pts
    return lam


_DLAM = np.array([[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


def eval_p1_basis(ref_points):
    """Values (npts, 4) and reference gradients (npts, 4, 3)."""
    lam = _barycentric(ref_points)
    grads = np.broadcast_to(_DLAM, (len(lam), 4, 3)).copy()
    return lam, grads


def eval_p2_basis(ref_points):
    """Values (npts, 10) and reference gradients (npts, 10, 3).

    Functions 0-3 are vertex functions lam_i (2 lam_i - 1); 4-9 are the edge
    bubbles 4 lam_i lam_j in LOCAL_EDGES order.
    """
    lam = _barycentric(ref_points)
    n = len(lam)
    vals = np.empty((n, 10))
    grads = np.empty((n, 10, 3))
    for i in range(4):
        vals[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
        grads[:, i] = (4.0 * lam[:, i] - 1.0)[:, None] * _DLAM[i]
    for e, (i, j) in enumerate(LOCAL_EDGES):
        vals[:, 4 + e] = 4.0 * lam[:, i] * lam[:, j]
        grads[:, 4 + e] = 4.0 * (lam[:, j, None] * _DLAM[i] + lam[:, i, None] * _DLAM[j])
    return vals, grads


@dataclass
class DofLayout:
    n_velocity_scalar: int
    n_pressure: int
    dirichlet_mask: np.ndarray  # (n_velocity,) bool
    dirichlet_values: np.ndarray  # (n_velocity,) float, zero where free

    @property
    def n_velocity(self) -> int:
        return 3 * self.n_velocity_scalar

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.dirichlet_mask)

    @property
    def fixed(self) -> np.ndarray:
        return np.flatnonzero(self.dirichlet_mask)

    @property
    def homogeneous(self) -> bool:
        return not np.any(self.dirichlet_values)


def make_layout(mesh: Mesh, boundary_velocity=None) -> DofLayout:
    """Mask every boundary P2 node; ``boundary_velocity(points, tags)`` -> (n, 3)."""
    nb = mesh.n_p2
    bnodes = mesh.boundary_p2()
    mask = np.zeros(3 * nb, dtype=bool)
    values = np.zeros(3 * nb)
    idx = (3 * bnodes[:, None] + np.arange(3)).ravel()
    mask[idx] = True
    if boundary_velocity is not None:
        vals = np.asarray(boundary_velocity(mesh.p2_nodes[bnodes], mesh.boundary[bnodes]), float)
        values[idx] = vals.reshape(-1)
    return DofLayout(nb, mesh.n_nodes, mask, values)


class FEGeometry:
    """Per-element affine maps and basis data at the 24 quadrature points."""

    def __init__(self, mesh: Mesh, quad: QuadratureRule | None = None):
        self.mesh = mesh
        self.quad = quad or keast_quadrature()
        x = mesh.nodes[mesh.tets]
        self.origin = x[:, 0]
        self.jac = np.transpose(x[:, 1:] - x[:, :1], (0, 2, 1))  # columns are edge vectors
        self.det = np.linalg.det(self.jac)
        bad = np.flatnonzero(np.abs(self.det) <= 1e-14 * np.max(np.abs(self.det), initial=1.0))
        if len(bad):
            raise ValueError(f"degenerate element {int(bad[0])} (zero Jacobian)")
        self.inv_jac = np.linalg.inv(self.jac)
        self.cells2 = mesh.p2_cells
        self.cells1 = mesh.tets
        self.p2_vals, p2_ref = eval_p2_basis(self.quad.points)
        self.p1_vals, p1_ref = eval_p1_basis(self.quad.points)
        self._p2_ref = p2_ref
        self.p1_grads = np.einsum("ad,edk->eak", p1_ref[0], self.inv_jac)  # (ne, 4, 3)
        self.wdet = np.abs(self.det)[:, None] * self.quad.weights[None, :]  # (ne, nq)

    @property
    def n_elements(self) -> int:
        return len(self.det)

    @cached_property
    def p2_grads(self) -> np.ndarray:
        """Physical P2 gradients (ne, nq, 10, 3)."""
        return np.einsum("qad,edk->eqak", self._p2_ref, self.inv_jac)

    @cached_property
    def qpoints(self) -> np.ndarray:
        """Physical quadrature points (ne, nq, 3)."""
        return self.origin[:, None, :] + np.einsum("edk,qk->eqd", self.jac, self.quad.points)

    def map_points(self, ref_points) -> np.ndarray:
        return self.origin[:, None, :] + np.einsum("edk,qk->eqd", self.jac, np.atleast_2d(ref_points))

    def velocity_at_quad(self, u: np.ndarray):
        """Values (ne, nq, 3) and gradients (ne, nq, 3, 3) [component, direction]."""
        ue = u.reshape(-1, 3)[self.cells2]  # (ne, 10, 3)
        vals = np.einsum("qa,eac->eqc", self.p2_vals, ue)
        grads = np.einsum("eqak,eac->eqck", self.p2_grads, ue)
        return vals, grads

    def pressure_at_quad(self, p: np.ndarray) -> np.ndarray:
        return np.einsum("qa,ea->eq", self.p1_vals, p[self.cells1])


def interpolate_velocity(mesh: Mesh, func) -> np.ndarray:
    """Nodal P2 interpolant of ``func(points) -> (n, 3)`` as a flat dof vector."""
    return np.asarray(func(mesh.p2_nodes), float).reshape(-1)


def interpolate_pressure(mesh: Mesh, func) -> np.ndarray:
    return np.asarray(func(mesh.nodes), float).reshape(-1)
