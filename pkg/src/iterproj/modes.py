"""Convergence predictors for the projection iteration.

Fourier-mode contraction constants for the continuous problem, and the
dense iteration matrix K = (alpha G^-1 + rho k M^-1) B A^-1 B^T of the
discrete Stokes step together with its spectrum.

The pressure iteration lives on the mean-zero subspace W = {p : (p, 1) = 0}.
Both B^T and G annihilate constants, so K is formed in an orthonormal basis
Z of W; there every factor is nonsingular and P = alpha G_W^-1 + rho k M_W^-1
is SPD.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .discretization import Discretization
from .sparse import cg_neumann, dense_eigs_spd_similar

MAX_DENSE_PRESSURE = 2000


def normal_mode_constant(alpha, rho, nu, k, xi_sq):
    """C = ((1.5 - alpha) + k (nu - rho) |xi|^2) / (1.5 + k nu |xi|^2)."""
    z = k * nu * np.asarray(xi_sq, float)
    return ((1.5 - alpha) + k * (nu - rho) * np.asarray(xi_sq, float)) / (1.5 + z)


def mode_constant_z(alpha, rho_over_nu, z):
    """Same constant written with z = k nu |xi|^2."""
    z = np.asarray(z, float)
    return ((1.5 - alpha) + z * (1.0 - rho_over_nu)) / (1.5 + z)


def uzawa_constant(z, rho_over_nu):
    """C_u(z; rho) = (1.5 + z (1 - rho/nu)) / (1.5 + z); requires z >= 0."""
    z = np.asarray(z, float)
    if np.any(z < 0):
        raise ValueError("z must be nonnegative")
    return (1.5 + z * (1.0 - rho_over_nu)) / (1.5 + z)


def uzawa_converges(rho_over_nu) -> bool:
    """|C_u| < 1 for every z > 0 exactly when 0 < rho/nu <= 2."""
    return 0.0 < rho_over_nu <= 2.0


@dataclass
class ModeReport:
    alphas: np.ndarray
    rho_over_nus: np.ndarray
    zs: np.ndarray
    C: np.ndarray  # (n_alpha, n_rho, n_z)
    converges: np.ndarray  # (n_alpha, n_rho): |C| < 1 over all z

    def rows(self):
        for i, a in enumerate(self.alphas):
            for j, r in enumerate(self.rho_over_nus):
                for l, z in enumerate(self.zs):
                    yield a, r, z, self.C[i, j, l], uzawa_constant(z, r), bool(abs(self.C[i, j, l]) < 1)


def mode_table(alphas, rho_over_nus, zs) -> ModeReport:
    a = np.asarray(alphas, float)[:, None, None]
    r = np.asarray(rho_over_nus, float)[None, :, None]
    z = np.asarray(zs, float)[None, None, :]
    C = mode_constant_z(a, r, z)
    return ModeReport(np.ravel(alphas), np.ravel(rho_over_nus), np.ravel(zs), C,
                      np.all(np.abs(C) < 1.0, axis=2))


@dataclass
class IterationMatrix:
    alpha: float
    rho: float
    k: float
    nu: float
    Z: np.ndarray  # orthonormal basis of the mean-zero subspace
    D: np.ndarray  # B A^-1 B^T (full pressure space)
    G: np.ndarray
    M: np.ndarray
    P_w: np.ndarray = field(repr=False)
    D_w: np.ndarray = field(repr=False)

    @property
    def K_w(self) -> np.ndarray:
        return self.P_w @ self.D_w

    @property
    def K(self) -> np.ndarray:
        """K acting on the full pressure space, mapping into the mean-zero subspace."""
        return self.Z @ self.K_w @ self.Z.T @ _w_projector(self)


def _w_projector(it: IterationMatrix) -> np.ndarray:
    """Oblique projector onto W along the constants (mass-weighted mean removal)."""
    w = it.M.sum(axis=1)
    m = len(w)
    return np.eye(m) - np.outer(np.ones(m), w) / w.sum()


def schur_complement(disc: Discretization, k: float, nu: float) -> np.ndarray:
    """Dense D = B A^-1 B^T with A = 1.5 A0 + k nu S on the free velocity dofs."""
    if disc.n_pressure > MAX_DENSE_PRESSURE:
        raise ValueError(f"{disc.n_pressure} pressure dofs exceeds the dense limit {MAX_DENSE_PRESSURE}")
    free = disc.layout.free
    A = disc.matrices.momentum(k, nu)[free][:, free].tocsc()
    Bf = disc.matrices.B[:, free]
    lu = spla.splu(A)
    X = lu.solve(Bf.T.toarray())
    D = Bf @ X
    return 0.5 * (D + D.T)


def build_iteration_matrix(disc: Discretization, alpha: float, rho: float, k: float, nu: float,
                           D: np.ndarray | None = None) -> IterationMatrix:
    if alpha < 0 or rho < 0 or (alpha == 0 and rho == 0):
        raise ValueError("need alpha, rho >= 0, not both zero")
    D = schur_complement(disc, k, nu) if D is None else D
    G = disc.matrices.G.toarray()
    M = disc.matrices.M.toarray()
    Z = sla.null_space(disc.mass_weights[None, :])
    Gw, Mw, Dw = Z.T @ G @ Z, Z.T @ M @ Z, Z.T @ D @ Z
    P = np.zeros_like(Gw)
    if alpha:
        P += alpha * np.linalg.inv(Gw)
    if rho:
        P += rho * k * np.linalg.inv(Mw)
    P = 0.5 * (P + P.T)
    return IterationMatrix(alpha, rho, k, nu, Z, D, G, M, P, 0.5 * (Dw + Dw.T))


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    lam_max: float
    lam_min: float
    bound: float
    spectral_radius: float
    all_positive: bool

    @property
    def convergence_guaranteed(self) -> bool:
        return self.bound < 2.0


def spectrum(it: IterationMatrix) -> SpectrumReport:
    lam = dense_eigs_spd_similar(it.P_w, it.D_w)
    return SpectrumReport(
        eigenvalues=lam, lam_max=float(lam[-1]), lam_min=float(lam[0]),
        bound=max(it.alpha / 1.5, it.rho / it.nu),
        spectral_radius=float(np.max(np.abs(1.0 - lam))),
        all_positive=bool(lam[0] > 0),
    )


def weak_div_constant(it: IterationMatrix) -> float:
    """kappa with ||B u||_inf <= kappa ||p_new - p||_inf for any iteration.

    The increment is dp = Pi (1/k)(alpha G^+ + rho k M^-1) B u; B u has zero
    sum, so B u is recovered from dp through a bordered solve. kappa is the
    infinity norm of that recovery map.
    """
    m = len(it.M)
    Gp = np.linalg.pinv(it.G)
    T = (it.alpha * Gp + it.rho * it.k * np.linalg.inv(it.M)) / it.k
    bordered = np.zeros((m + 1, m + 1))
    bordered[:m, :m] = T
    bordered[:m, m] = -1.0
    bordered[m, :m] = 1.0
    R = np.linalg.inv(bordered)[:m, :m]
    return float(np.abs(R).sum(axis=1).max())


@dataclass
class NonDivFreeReport:
    div_before: float
    div_after: float

    @property
    def ratio(self) -> float:
        return self.div_after / self.div_before if self.div_before else 0.0


def default_nonsolenoidal(points):
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    bump = np.sin(np.pi * x) * np.sin(np.pi * y) * np.sin(np.pi * z)
    return np.stack([bump * (1 + x), 0.5 * bump * y, np.zeros_like(x)], axis=1)


def single_projection_nondivfree_check(disc: Discretization, k: float = 1e-3, u_star=None,
                                       tol: float = 1e-13) -> NonDivFreeReport:
    """One velocity correction u = u* - k A0^-1 B^T phi with G phi = B u* / k."""
    mats, free = disc.matrices, disc.layout.free
    if u_star is None:
        u_star = default_nonsolenoidal(disc.mesh.p2_nodes).reshape(-1)
        u_star[disc.layout.dirichlet_mask] = 0.0
    Bu = mats.B @ u_star
    phi, _ = cg_neumann(mats.G, Bu / k, tol=tol)
    A0f = mats.A0[free][:, free].tocsc()
    corr = spla.spsolve(A0f, (mats.B.T @ phi)[free])
    u_new = u_star.copy()
    u_new[free] -= k * corr
    return NonDivFreeReport(float(np.abs(Bu).max()), float(np.abs(mats.B @ u_new).max()))


def stokes_step_data(problem, disc: Discretization, k: float):
    """Right-hand side, starting pressure and extrapolated velocity of the
    second time step of ``problem`` (exact start-up levels)."""
    from .march import bdf2_rhs, initial_state
    state = initial_state(problem, disc, k)
    load = disc.assembler.assemble_load(problem.forcing, state.t + k)
    F = bdf2_rhs(state, load, k, disc.matrices.A0)
    return F, state.p.copy(), 2.0 * state.u - state.u_prev


def measured_stokes_rate(problem, disc: Discretization, alpha: float, rho: float, k: float,
                         iters: int = 40, start: int = 10, stop: int = 30) -> float:
    """Asymptotic pressure-increment ratio of the convection-free iteration.

    Runs with a direct momentum solver and no stopping test so the tail of
    the increment sequence is clean.
    """
    from .projector import ProjectionSolver, SolverParams, measured_rate
    prm = SolverParams(alpha=alpha, rho=rho, nu=problem.nu, k=k, eps=1e-300, iter_max=iters,
                       convection="NONE", linear_solver="direct", poisson_tol=1e-14,
                       mass_tol=1e-14, track_strong_div=False)
    F, p0, w = stokes_step_data(problem, disc, k)
    _, _, rep = ProjectionSolver(disc, prm).solve_time_step(F, p0, w)
    return measured_rate(rep.increments(), start=start, stop=stop)
