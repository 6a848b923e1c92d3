"""BDF2 time marching around the projection solver."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import StepDiagnostics, energy, error_norms, strong_div_measure, weak_div_measure
from .discretization import Discretization
from .projector import ProjectionSolver, SolverParams
from .spaces import interpolate_pressure, interpolate_velocity

log = logging.getLogger(__name__)

ENERGY_RTOL = 1e-9
BOOTSTRAP_EPS = 1e-8
BOOTSTRAP_ITERS = 500


class EnergyViolation(RuntimeError):
    pass


@dataclass
class TimeState:
    u: np.ndarray
    u_prev: np.ndarray
    p: np.ndarray
    p_prev: np.ndarray
    t: float
    n: int

    def advance(self, u_new, p_new, k) -> "TimeState":
        return TimeState(u_new, self.u, p_new, self.p, self.t + k, self.n + 1)

    def copy(self) -> "TimeState":
        return TimeState(self.u.copy(), self.u_prev.copy(), self.p.copy(), self.p_prev.copy(),
                         self.t, self.n)


def bdf2_rhs(state: TimeState, load: np.ndarray, k: float, A0) -> np.ndarray:
    """F = A0 (2 u^n - 0.5 u^{n-1}) + k (f^{n+1}, w_i)."""
    return A0 @ (2.0 * state.u - 0.5 * state.u_prev) + k * load


def initial_state(problem, disc: Discretization, k: float) -> TimeState:
    """Levels 0 and 1: exact interpolants, or a copy of the boundary lift."""
    if problem.startup == "exact":
        def level(t):
            u = interpolate_velocity(disc.mesh, lambda X: problem.velocity(t, X))
            u[disc.layout.dirichlet_mask] = disc.lifting[disc.layout.dirichlet_mask]
            p = disc.remove_mean(interpolate_pressure(disc.mesh, lambda X: problem.pressure(t, X)))
            return u, p
        u0, p0 = level(0.0)
        u1, p1 = level(k)
        return TimeState(u1, u0, p1, p0, k, 1)
    if problem.startup == "copy":
        u0 = disc.lifting.copy()
        p0 = np.zeros(disc.n_pressure)
        return TimeState(u0.copy(), u0, p0.copy(), p0, k, 1)
    raise ValueError(f"unknown startup policy {problem.startup!r}")


@dataclass
class SimulationResult:
    state: TimeState
    diagnostics: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    energy_violations: list = field(default_factory=list)
    energy_checked: bool = False
    global_bound_ok: bool | None = None
    skip_reason: str = ""

    @property
    def average_iterations(self) -> float:
        return float(np.mean([r.iterations for r in self.reports])) if self.reports else 0.0


def energy_check_reason(problem, disc: Discretization, params: SolverParams) -> str:
    if params.convection == "IMEX_EXPLICIT":
        return "explicit convection: no energy estimate"
    if not disc.layout.homogeneous:
        return "nonhomogeneous Dirichlet data: no energy estimate"
    return ""


def run_simulation(problem, disc: Discretization, params: SolverParams, T_final: float,
                   observers=(), assert_energy: str = "warn", bootstrap: bool | None = None,
                   state: TimeState | None = None) -> SimulationResult:
    """March from level 1 up to t = T_final.

    ``observers`` are called as ``obs(state, diag, report)`` after every step.
    ``assert_energy`` is "warn", "abort" or "off". With ``bootstrap`` (default
    for problems that copy level 0) the first step is iterated to tight
    convergence.
    """
    k = params.k
    n_final = int(math.floor(T_final / k + 1e-9))
    if n_final < 2:
        raise ValueError("T_final must cover at least two time steps")
    if assert_energy not in ("warn", "abort", "off"):
        raise ValueError(f"assert_energy must be warn/abort/off, got {assert_energy!r}")
    solver = ProjectionSolver(disc, params)
    state = state or initial_state(problem, disc, k)
    mats = disc.matrices
    if bootstrap is None:
        bootstrap = problem.startup == "copy"

    reason = energy_check_reason(problem, disc, params) if assert_energy != "off" else "disabled"
    result = SimulationResult(state, energy_checked=not reason, skip_reason=reason)
    if reason and assert_energy != "off":
        log.info("energy assertion skipped: %s", reason)

    E1 = energy(state.u, state.u_prev, mats.A0)
    forcing_sum = 0.0
    growth = math.exp(n_final * k / (1.0 - k)) if k < 1 else math.inf

    while state.n < n_final:
        t_new = state.t + k
        load = disc.assembler.assemble_load(problem.forcing, t_new)
        F = bdf2_rhs(state, load, k, mats.A0)
        w = 2.0 * state.u - state.u_prev
        p0 = 2.0 * state.p - state.p_prev
        if bootstrap and state.n == 1:
            u_new, p_new, rep = solver.solve_time_step(
                F, p0, w, iter_max=max(BOOTSTRAP_ITERS, params.iter_max),
                eps=min(BOOTSTRAP_EPS, params.eps))
        else:
            u_new, p_new, rep = solver.solve_time_step(F, p0, w)

        E_old = energy(state.u, state.u_prev, mats.A0)
        f_sq = disc.assembler.l2_norm_sq(problem.forcing, t_new)
        forcing_sum += f_sq
        new_state = state.advance(u_new, p_new, k)
        E_new = energy(u_new, state.u, mats.A0)
        lhs = E_new - k * disc.velocity_l2_sq(u_new)
        rhs = E_old + 4.0 * k * f_sq
        slack = (rhs - lhs) / max(rhs, 1e-300)

        diag = StepDiagnostics(
            step=new_state.n, t=new_state.t, iterations=rep.iterations, converged=rep.converged,
            weak_div=weak_div_measure(u_new, mats), strong_div=strong_div_measure(u_new, disc.geo),
            energy=E_new, energy_slack=slack,
        )
        if problem.has_exact:
            e = error_norms(u_new, p_new, problem.velocity, problem.velocity_grad, problem.pressure,
                            new_state.t, disc.geo)
            diag.err_u_L2, diag.err_u_H1, diag.err_u_H1semi, diag.err_p_L2 = e.u_l2, e.u_h1, e.u_h1_semi, e.p_l2

        if not reason and rep.converged and rhs - lhs < -ENERGY_RTOL * max(E_new, rhs):
            msg = f"energy inequality violated at step {new_state.n}: relative slack {slack:.3e}"
            result.energy_violations.append(new_state.n)
            if assert_energy == "abort":
                raise EnergyViolation(msg)
            log.warning(msg)
        if not rep.converged:
            log.warning("step %d: iteration cap reached without convergence", new_state.n)

        state = new_state
        result.diagnostics.append(diag)
        result.reports.append(rep)
        for obs in observers:
            obs(state, diag, rep)

    result.state = state
    if not reason:
        bound = growth * (E1 + 4.0 * k * forcing_sum)
        result.global_bound_ok = bool(energy(state.u, state.u_prev, mats.A0) <= bound * (1 + ENERGY_RTOL))
    return result
