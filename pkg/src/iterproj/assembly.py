"""Global matrices and load vectors for the Taylor-Hood discretisation.

Element contributions are scattered into precomputed CSR patterns with
``np.bincount``, which sums in a fixed order; repeated assemblies of the same
data are therefore bitwise identical.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .mesh import Mesh
from .spaces import DofLayout, FEGeometry

CONVECTION_FORMS = ("skew", "advective")


class _Pattern:
    """CSR sparsity pattern for dense element blocks rows x cols."""

    def __init__(self, rows: np.ndarray, cols: np.ndarray, shape):
        r = np.broadcast_to(rows[:, :, None], (len(rows), rows.shape[1], cols.shape[1])).ravel()
        c = np.broadcast_to(cols[:, None, :], (len(cols), rows.shape[1], cols.shape[1])).ravel()
        keys = r.astype(np.int64) * shape[1] + c
        uniq, self.inverse = np.unique(keys, return_inverse=True)
        self.indices = (uniq % shape[1]).astype(np.int32)
        self.indptr = np.concatenate([[0], np.cumsum(np.bincount(uniq // shape[1], minlength=shape[0]))])
        self.shape = shape
        self.nnz = len(uniq)

    def build(self, blocks: np.ndarray) -> sp.csr_matrix:
        data = np.bincount(self.inverse, weights=blocks.ravel(), minlength=self.nnz)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=self.shape)


def _vec(scalar: sp.spmatrix) -> sp.csr_matrix:
    return sp.kron(scalar, sp.identity(3), format="csr")


@dataclass
class SystemMatrices:
    A0: sp.csr_matrix  # velocity mass
    S: sp.csr_matrix  # velocity stiffness
    B: sp.csr_matrix  # B_ij = -(q_i, div w_j)
    G: sp.csr_matrix  # pressure stiffness
    M: sp.csr_matrix  # pressure mass
    mass_scalar: sp.csr_matrix
    stiff_scalar: sp.csr_matrix

    def momentum(self, k: float, nu: float, conv: sp.spmatrix | None = None) -> sp.csr_matrix:
        A = 1.5 * self.A0 + (k * nu) * self.S
        if conv is not None:
            A = A + k * conv
        return A.tocsr()


class Assembler:
    def __init__(self, mesh: Mesh, geometry: FEGeometry | None = None):
        self.mesh = mesh
        self.geo = geometry or FEGeometry(mesh)
        n2, n1 = mesh.n_p2, mesh.n_nodes
        c2, c1 = self.geo.cells2, self.geo.cells1
        self._p22 = _Pattern(c2, c2, (n2, n2))
        self._p11 = _Pattern(c1, c1, (n1, n1))
        vcols = (3 * c2[:, :, None] + np.arange(3)).reshape(len(c2), 30)
        self._p12 = _Pattern(c1, vcols, (n1, 3 * n2))

    def assemble_static(self) -> SystemMatrices:
        g = self.geo
        phi, wd = g.p2_vals, g.wdet
        mass2 = np.einsum("eq,qa,qb->eab", wd, phi, phi)
        stiff2 = np.einsum("eq,eqak,eqbk->eab", wd, g.p2_grads, g.p2_grads)
        vol = np.abs(g.det) / 6.0
        stiff1 = vol[:, None, None] * np.einsum("eak,ebk->eab", g.p1_grads, g.p1_grads)
        mass1 = np.einsum("eq,qa,qb->eab", wd, g.p1_vals, g.p1_vals)
        div = -np.einsum("eq,qi,eqac->eiac", wd, g.p1_vals, g.p2_grads)
        Ms = self._p22.build(mass2)
        Ss = self._p22.build(stiff2)
        return SystemMatrices(
            A0=_vec(Ms), S=_vec(Ss),
            B=self._p12.build(div.reshape(len(div), 4, 30)),
            G=self._p11.build(stiff1), M=self._p11.build(mass1),
            mass_scalar=Ms, stiff_scalar=Ss,
        )

    def convection_scalar(self, w: np.ndarray, form: str = "skew") -> sp.csr_matrix:
        """Scalar block Ns[b, a] = ((w.grad) phi_a + 1/2 (div w) phi_a, phi_b)."""
        if form not in CONVECTION_FORMS:
            raise ValueError(f"unknown convection form {form!r}")
        if w.shape != (3 * self.mesh.n_p2,):
            raise ValueError(f"w has shape {w.shape}, expected ({3 * self.mesh.n_p2},)")
        g = self.geo
        wq, dwq = g.velocity_at_quad(w)
        adv = np.einsum("eqk,eqak->eqa", wq, g.p2_grads)
        if form == "skew":
            divw = np.trace(dwq, axis1=2, axis2=3)
            adv = adv + 0.5 * divw[:, :, None] * g.p2_vals[None]
        blocks = np.einsum("eq,qb,eqa->eba", g.wdet, g.p2_vals, adv)
        return self._p22.build(blocks)

    def assemble_convection(self, w: np.ndarray, form: str = "skew") -> sp.csr_matrix:
        """Velocity-space matrix N(w)_ij = (NL(w, w_j), w_i)."""
        return _vec(self.convection_scalar(w, form))

    def assemble_load(self, f, t: float) -> np.ndarray:
        """Entries (f(t, .), w_i); ``f(t, X)`` maps (..., 3) points to (..., 3)."""
        g = self.geo
        fq = np.asarray(f(t, g.qpoints), float)
        blocks = np.einsum("eq,qa,eqc->eac", g.wdet, g.p2_vals, fq)
        out = np.zeros((self.mesh.n_p2, 3))
        np.add.at(out, g.cells2, blocks)
        return out.reshape(-1)

    def l2_norm_sq(self, f, t: float) -> float:
        """Quadrature value of the squared L2 norm of a vector field."""
        fq = np.asarray(f(t, self.geo.qpoints), float)
        return float(np.einsum("eq,eqc,eqc->", self.geo.wdet, fq, fq))


def assemble_static(mesh: Mesh, layout: DofLayout | None = None) -> SystemMatrices:
    return Assembler(mesh).assemble_static()


def lift(layout: DofLayout) -> np.ndarray:
    """Full-length vector carrying the prescribed values on constrained dofs."""
    return np.where(layout.dirichlet_mask, layout.dirichlet_values, 0.0)


def apply_dirichlet(A: sp.spmatrix, b: np.ndarray, layout: DofLayout):
    """Eliminate constrained dofs, keeping the matrix size.

    Constrained columns move to the right-hand side scaled by the prescribed
    values, constrained rows and columns become identity, and the right-hand
    side carries the prescribed values on those rows.
    """
    fixed = layout.dirichlet_mask.astype(float)
    free = 1.0 - fixed
    g = lift(layout)
    rhs = np.asarray(b, float) - A @ g
    rhs[layout.dirichlet_mask] = g[layout.dirichlet_mask]
    Df = sp.diags(free)
    Ac = (Df @ A @ Df + sp.diags(fixed)).tocsr()
    Ac.eliminate_zeros()
    return Ac, rhs


def dump_matrix(path, A: sp.spmatrix, comment: str = "") -> None:
    scipy.io.mmwrite(str(path), sp.coo_matrix(A), comment=comment)
