"""Iterative projection solver for the per-step saddle-point problem.

Each iteration solves the momentum equation with the current pressure,
a pure-Neumann Poisson problem for the divergence potential, and updates

    M p_new = M p + alpha M phi + rho B u,

after which the mass-weighted mean of the pressure is removed.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .diagnostics import strong_div_measure, weak_div_measure
from .discretization import Discretization
from .sparse import cg_neumann

log = logging.getLogger(__name__)

CONVECTION_MODES = ("NONE", "SI_SKEW", "FI_SKEW", "IMEX_EXPLICIT")
AITKEN_TINY = 1e-300
POISSON_TOL_FLOOR = 1e-14
# GMRES noise in u shows up in dp amplified by roughly 1/k; keep it well below eps
MOMENTUM_TOL_FLOOR = 1e-14
# For a contraction factor c in (-1, 1) the ideal weight c/(c-1) lies in
# (-inf, 1/2]; values outside are clipped so a stalled step cannot blow up.
AITKEN_MU_RANGE = (-1e3, 0.5)
AITKEN_REL_TINY = 1e-20


class ParameterWarning(UserWarning):
    """alpha/rho outside the range where convergence is guaranteed."""


class InnerSolverError(RuntimeError):
    pass


def convergence_bound(alpha: float, rho: float, nu: float) -> float:
    """Upper bound max(alpha/1.5, rho/nu) on the largest eigenvalue of K."""
    return max(alpha / 1.5, rho / nu)


@dataclass
class SolverParams:
    alpha: float = 1.5
    rho: float = 1.0
    nu: float = 1.0
    k: float = 1e-3
    eps: float = 1e-2
    iter_max: int = 50
    convection: str = "SI_SKEW"
    accelerate: bool = False
    momentum_tol: Optional[float] = None
    poisson_tol: Optional[float] = None
    mass_tol: float = 1e-12
    linear_solver: str = "gmres"
    ilut_fill: float = 10.0
    ilut_drop: float = 1e-4
    gmres_restart: int = 50
    gmres_max_iters: int = 500
    track_strong_div: bool = True

    def __post_init__(self):
        if not (self.k > 0 and self.nu > 0 and self.eps > 0):
            raise ValueError("k, nu and eps must be positive")
        if self.iter_max < 1:
            raise ValueError("iter_max must be >= 1")
        if self.alpha < 0 or self.rho < 0 or (self.alpha == 0 and self.rho == 0):
            raise ValueError("need alpha, rho >= 0, not both zero")
        if self.convection not in CONVECTION_MODES:
            raise ValueError(f"convection must be one of {CONVECTION_MODES}")
        if self.momentum_tol is None:
            self.momentum_tol = max(min(1e-10, self.eps * 1e-5), MOMENTUM_TOL_FLOOR)
        if self.poisson_tol is None:
            self.poisson_tol = max(min(1e-10, self.eps / 100.0), POISSON_TOL_FLOOR)
        bound = convergence_bound(self.alpha, self.rho, self.nu)
        if bound >= 2.0:
            warnings.warn(f"max(alpha/1.5, rho/nu) = {bound:g} >= 2: iteration convergence is "
                          "not guaranteed", ParameterWarning, stacklevel=3)


def scheme_preset(name: str, nu: float, alpha: float | None = None, rho: float | None = None):
    """(alpha, rho) for a named scheme.

    ``uzawa`` takes ``rho`` (default nu); ``iterative`` takes both.
    """
    if name == "rotational_projection":
        return 1.5, nu
    if name == "standard_projection":
        return 1.5, 0.0
    if name == "uzawa":
        return 0.0, nu if rho is None else rho
    if name == "iterative":
        if alpha is None or rho is None:
            raise ValueError("iterative preset needs alpha and rho")
        return alpha, rho
    raise ValueError(f"unknown scheme {name!r}")


@dataclass
class IterationRecord:
    s: int
    dp_max: float
    dp_l2: float
    weak_div: float
    strong_div: float


@dataclass
class IterationReport:
    records: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.records)

    def increments(self) -> np.ndarray:
        return np.array([r.dp_max for r in self.records])


def aitken_update(p_prev, fp_prev, r_before):
    """One accelerated step of the fixed-point map f.

    ``p_prev`` is the last iterate, ``fp_prev = f(p_prev)`` and ``r_before``
    the residual f(p) - p of the iterate before it. Returns the accelerated
    iterate and the current residual; when consecutive residuals coincide the
    plain update f(p_prev) is returned, and the weight is clipped to
    ``AITKEN_MU_RANGE``.
    """
    r = fp_prev - p_prev
    dr = r - r_before
    denom = float(np.dot(np.ravel(dr), np.ravel(dr)))
    scale = float(np.dot(np.ravel(r), np.ravel(r)))
    if denom < AITKEN_TINY or denom < AITKEN_REL_TINY * scale:
        return fp_prev, r
    mu = float(np.dot(np.ravel(r), np.ravel(dr))) / denom
    if not np.isfinite(mu):
        return fp_prev, r
    mu = min(max(mu, AITKEN_MU_RANGE[0]), AITKEN_MU_RANGE[1])
    return fp_prev + mu * (p_prev - fp_prev), r


@dataclass
class IterateResult:
    u: np.ndarray
    phi: np.ndarray
    p: np.ndarray


class ProjectionSolver:
    def __init__(self, disc: Discretization, params: SolverParams):
        self.disc = disc
        self.params = params
        self._static = None

    # momentum operators -------------------------------------------------
    def _operator(self, conv_matrix=None):
        prm = self.params
        A = self.disc.matrices.momentum(prm.k, prm.nu, conv_matrix)
        return self.disc.constrained(A, prm.linear_solver, fill=prm.ilut_fill,
                                     drop=prm.ilut_drop, restart=prm.gmres_restart)

    def static_operator(self):
        if self._static is None:
            self._static = self._operator()
        return self._static

    def operator_for(self, w):
        if self.params.convection in ("NONE", "IMEX_EXPLICIT"):
            return self.static_operator()
        return self._operator(self.disc.assembler.assemble_convection(w))

    def explicit_convection(self, w) -> np.ndarray:
        """-k ((w.grad) w, v) for the IMEX right-hand side."""
        Nw = self.disc.assembler.assemble_convection(w, form="advective")
        return -self.params.k * (Nw @ w)

    # one iteration --------------------------------------------------------
    def iterate_once(self, p, F, op, s: int = 0, u_guess=None) -> IterateResult:
        prm, mats = self.params, self.disc.matrices
        u, rep = op.solve(F - prm.k * (mats.B.T @ p), tol=prm.momentum_tol,
                          max_iters=prm.gmres_max_iters, x0=u_guess)
        if not rep.converged:
            raise InnerSolverError(f"momentum solve failed at iteration {s}: "
                                   f"residual {rep.residual:.3e} after {rep.iterations} its")
        Bu = mats.B @ u
        phi, prep = cg_neumann(mats.G, Bu / prm.k, tol=prm.poisson_tol)
        if not prep.converged:
            raise InnerSolverError(f"Poisson solve failed at iteration {s}: residual {prep.residual:.3e}")
        p_new = p + prm.alpha * phi
        if prm.rho:
            p_new = p_new + prm.rho * self.disc.solve_mass(Bu, tol=prm.mass_tol)
        return IterateResult(u, phi, self.disc.remove_mean(p_new))

    # one time step --------------------------------------------------------
    def solve_time_step(self, F, p0, w, iter_max: int | None = None, eps: float | None = None):
        """Iterate from p0 until both pressure increments drop below eps.

        ``w`` is the extrapolated velocity 2u^n - u^{n-1}. Returns
        (u, p, IterationReport) where u is the last momentum iterate.
        """
        prm, disc = self.params, self.disc
        iter_max = iter_max or prm.iter_max
        eps = prm.eps if eps is None else eps
        mode = prm.convection
        if mode == "IMEX_EXPLICIT":
            F = F + self.explicit_convection(w)
        op = self.operator_for(w) if mode != "FI_SKEW" else None
        report = IterationReport()
        p = disc.remove_mean(np.asarray(p0, float))
        u_conv = w
        u = None
        r_before = None
        for s in range(iter_max):
            if mode == "FI_SKEW":
                op = self.operator_for(u_conv)
            it = self.iterate_once(p, F, op, s, u_guess=u)
            u = it.u
            p_next = it.p
            if prm.accelerate:
                if r_before is None:
                    r_before = p_next - p
                else:
                    p_next, r_before = aitken_update(p, p_next, r_before)
                    p_next = disc.remove_mean(p_next)
            dp = p_next - p
            rec = IterationRecord(
                s=s, dp_max=float(np.abs(dp).max()), dp_l2=disc.pressure_l2(dp),
                weak_div=weak_div_measure(u, disc.matrices),
                strong_div=strong_div_measure(u, disc.geo) if prm.track_strong_div else float("nan"),
            )
            report.records.append(rec)
            p = p_next
            u_conv = u
            if rec.dp_max < eps and rec.dp_l2 < eps:
                report.converged = True
                break
        if not report.converged:
            log.info("iteration cap %d reached (last dp_max=%.3e)", iter_max, report.records[-1].dp_max)
        return u, p, report


def measured_rate(increments, start: int = 10, stop: int = 30, floor: float = 1e-13) -> float:
    """Geometric-mean contraction of a sequence of increment norms.

    Uses the window [start, stop], shortened when the increments fall below
    ``floor`` times the first entry (round-off plateau).
    """
    d = np.asarray(increments, float)
    stop = min(stop, len(d) - 1)
    ok = np.flatnonzero(d > floor * d[0])
    stop = min(stop, ok[-1]) if len(ok) else stop
    start = min(start, max(stop - 5, 1))
    if stop <= start:
        raise ValueError("not enough increments above the noise floor")
    return float((d[stop] / d[start]) ** (1.0 / (stop - start)))
