"""Incompressibility measures, error norms and the discrete energy."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .spaces import FEGeometry, eval_p2_basis

_REF_VERTICES = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
_, _P2_VERTEX_GRADS = eval_p2_basis(_REF_VERTICES)


def weak_div_measure(u: np.ndarray, matrices) -> float:
    """max_i |(div u, q_i)| = ||B u||_inf."""
    return float(np.abs(matrices.B @ u).max())


def divergence_at(u: np.ndarray, geo: FEGeometry, ref_grads: np.ndarray) -> np.ndarray:
    """div u_h at reference points with P2 reference gradients (npts, 10, 3)."""
    ue = u.reshape(-1, 3)[geo.cells2]  # (ne, 10, 3)
    # d u_c / d x_c summed over c
    phys = np.einsum("qad,edk->eqak", ref_grads, geo.inv_jac)
    return np.einsum("eqac,eac->eq", phys, ue)


def divergence_operator(geo: FEGeometry, sample: str = "both") -> sp.csr_matrix:
    """Sparse map from velocity dofs to div u_h at the sample points.

    Cached on ``geo`` since it is applied once per iteration.
    """
    cache = geo.__dict__.setdefault("_div_ops", {})
    if sample in cache:
        return cache[sample]
    blocks = []
    if sample in ("both", "vertices"):
        blocks.append(np.einsum("qad,edk->eqak", _P2_VERTEX_GRADS, geo.inv_jac))
    if sample in ("both", "quadrature"):
        blocks.append(geo.p2_grads)
    if not blocks:
        raise ValueError(f"unknown sample scheme {sample!r}")
    phys = np.concatenate(blocks, axis=1)  # (ne, npts, 10, 3)
    ne, npts = phys.shape[:2]
    rows = np.broadcast_to(np.arange(ne * npts).reshape(ne, npts, 1, 1), phys.shape)
    cols = 3 * geo.cells2[:, None, :, None] + np.arange(3)
    cols = np.broadcast_to(cols, phys.shape)
    op = sp.csr_matrix((phys.ravel(), (rows.ravel(), cols.ravel())),
                       shape=(ne * npts, 3 * geo.mesh.n_p2))
    cache[sample] = op
    return op


def strong_div_measure(u: np.ndarray, geo: FEGeometry, sample: str = "both") -> float:
    """max |div u_h| over element vertices and/or quadrature points.

    div u_h is affine on each element, so the vertex maximum is exact.
    """
    return float(np.abs(divergence_operator(geo, sample) @ u).max())


@dataclass
class ErrorNorms:
    u_l2: float
    u_h1_semi: float
    u_h1: float
    p_l2: float


def error_norms(u_h, p_h, velocity, velocity_grad, pressure, t, geo: FEGeometry) -> ErrorNorms:
    """Errors against exact fields evaluated at the quadrature points.

    The pressure error is measured modulo constants.
    """
    X = geo.qpoints
    uq, duq = geo.velocity_at_quad(u_h)
    eu = uq - velocity(t, X)
    edu = duq - velocity_grad(t, X)
    wd = geo.wdet
    l2 = float(np.einsum("eq,eqc,eqc->", wd, eu, eu))
    h1 = float(np.einsum("eq,eqij,eqij->", wd, edu, edu))
    ep = geo.pressure_at_quad(p_h) - pressure(t, X)
    ep = ep - np.einsum("eq,eq->", wd, ep) / wd.sum()
    pl2 = float(np.einsum("eq,eq,eq->", wd, ep, ep))
    return ErrorNorms(np.sqrt(l2), np.sqrt(h1), np.sqrt(l2 + h1), np.sqrt(pl2))


def energy(u, u_prev, A0) -> float:
    """||u||^2 + ||2u - u_prev||^2 in the L2 (mass-matrix) norm."""
    v = 2.0 * u - u_prev
    return float(u @ (A0 @ u) + v @ (A0 @ v))


@dataclass
class StepDiagnostics:
    step: int
    t: float
    iterations: int
    converged: bool
    weak_div: float
    strong_div: float
    energy: float
    energy_slack: float = float("nan")
    err_u_L2: Optional[float] = None
    err_u_H1: Optional[float] = None
    err_u_H1semi: Optional[float] = None
    err_p_L2: Optional[float] = None

    @classmethod
    def columns(cls, with_errors: bool):
        names = [f.name for f in fields(cls)]
        if not with_errors:
            names = [n for n in names if not n.startswith("err_")]
        return names

    def row(self, with_errors: bool):
        return [getattr(self, n) for n in self.columns(with_errors)]
