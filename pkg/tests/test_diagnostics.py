import numpy as np
import pytest

from iterproj.diagnostics import (StepDiagnostics, energy, error_norms, strong_div_measure,
                                  weak_div_measure)
from iterproj.problems import (problem1_pressure, problem1_velocity, problem1_velocity_grad)
from iterproj.spaces import interpolate_pressure, interpolate_velocity


def test_strong_div_of_simple_fields(disc2):
    mesh, geo = disc2.mesh, disc2.geo
    rot = interpolate_velocity(mesh, lambda X: np.stack([X[..., 1], X[..., 2], X[..., 0]], -1))
    assert strong_div_measure(rot, geo) < 1e-13
    stretch = interpolate_velocity(mesh, lambda X: np.stack([X[..., 0] ** 2, 0 * X[..., 0], 0 * X[..., 0]], -1))
    # div = 2x, maximal at x = 1 (a vertex)
    assert strong_div_measure(stretch, geo, "vertices") == pytest.approx(2.0, rel=1e-12)
    assert strong_div_measure(stretch, geo, "quadrature") < 2.0
    with pytest.raises(ValueError):
        strong_div_measure(stretch, geo, "faces")


def test_weak_div_matches_matrix(disc2, rng):
    u = rng.standard_normal(disc2.n_velocity)
    assert weak_div_measure(u, disc2.matrices) == np.abs(disc2.matrices.B @ u).max()


def test_error_norms_vanish_for_interpolated_quadratic(disc2):
    f = lambda t, X: np.stack([X[..., 0] * X[..., 1], t + X[..., 2] ** 2, X[..., 0]], -1)
    J = lambda t, X: np.stack([
        np.stack([X[..., 1], X[..., 0], 0 * X[..., 0]], -1),
        np.stack([0 * X[..., 0], 0 * X[..., 0], 2 * X[..., 2]], -1),
        np.stack([1 + 0 * X[..., 0], 0 * X[..., 0], 0 * X[..., 0]], -1)], -2)
    p = lambda t, X: 3 * X[..., 0] - X[..., 1]
    u_h = interpolate_velocity(disc2.mesh, lambda X: f(0.5, X))
    p_h = interpolate_pressure(disc2.mesh, lambda X: p(0.5, X)) + 7.0  # constant shift is ignored
    e = error_norms(u_h, p_h, f, J, p, 0.5, disc2.geo)
    assert max(e.u_l2, e.u_h1, e.u_h1_semi, e.p_l2) < 1e-12


def test_error_norms_positive_for_problem1(disc2):
    u_h = interpolate_velocity(disc2.mesh, lambda X: problem1_velocity(0.0, X))
    p_h = interpolate_pressure(disc2.mesh, lambda X: problem1_pressure(0.0, X))
    e = error_norms(u_h, p_h, problem1_velocity, problem1_velocity_grad, problem1_pressure, 0.0, disc2.geo)
    assert 0 < e.u_l2 < e.u_h1
    assert e.u_h1 == pytest.approx(np.hypot(e.u_l2, e.u_h1_semi))


def test_energy_formula(disc2, rng):
    u, v = rng.standard_normal((2, disc2.n_velocity))
    A0 = disc2.matrices.A0
    w = 2 * u - v
    assert energy(u, v, A0) == pytest.approx(u @ A0 @ u + w @ A0 @ w)


def test_step_diagnostics_columns():
    d = StepDiagnostics(step=2, t=0.1, iterations=3, converged=True, weak_div=1e-9,
                        strong_div=0.1, energy=1.0)
    assert "err_u_H1" in StepDiagnostics.columns(True)
    assert "err_u_H1" not in StepDiagnostics.columns(False)
    assert len(d.row(False)) == len(StepDiagnostics.columns(False))
