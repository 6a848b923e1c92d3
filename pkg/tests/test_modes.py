import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from iterproj.modes import (MAX_DENSE_PRESSURE, build_iteration_matrix, mode_constant_z,
                            mode_table, normal_mode_constant, schur_complement,
                            single_projection_nondivfree_check, spectrum, uzawa_constant,
                            uzawa_converges, weak_div_constant)
from iterproj.problems import problem1_spec
from iterproj.projector import ProjectionSolver, SolverParams
from iterproj.modes import stokes_step_data


@given(st.floats(0, 3), st.floats(0, 3), st.floats(1e-3, 10), st.floats(1e-4, 1e-1),
       st.floats(0, 1e4))
def test_mode_constant_forms_agree(alpha, rho_over_nu, nu, k, xi_sq):
    a = normal_mode_constant(alpha, rho_over_nu * nu, nu, k, xi_sq)
    b = mode_constant_z(alpha, rho_over_nu, k * nu * xi_sq)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


def test_rotational_constant_is_zero():
    z = np.logspace(-3, 3, 13)
    assert np.all(mode_constant_z(1.5, 1.0, z) == 0.0)


def test_uzawa():
    z = np.logspace(-6, 6, 25)
    assert np.allclose(uzawa_constant(z, 1.0), mode_constant_z(0.0, 1.0, z))
    assert uzawa_constant(0.0, 2.5) == 1.0
    assert np.all(np.abs(uzawa_constant(z, 2.0)) < 1)
    assert np.abs(uzawa_constant(1e6, 2.5)) > 1
    assert uzawa_converges(2.0) and not uzawa_converges(2.5) and not uzawa_converges(0.0)
    with pytest.raises(ValueError):
        uzawa_constant(-1.0, 1.0)


def test_mode_table_flags():
    rep = mode_table([0, 1.5, 2.5], [0.5, 1, 2, 2.5], np.logspace(-3, 3, 7))
    assert rep.C.shape == (3, 4, 7)
    assert rep.converges[1, 1]
    assert not rep.converges[0, 3]
    assert len(list(rep.rows())) == 84


@pytest.fixture(scope="module")
def it2(disc2):
    return build_iteration_matrix(disc2, 1.5, 1.0, 1e-3, 1.0)


def test_spectrum_matches_general_eigensolver(it2):
    rep = spectrum(it2)
    # other route: nonsymmetric eigensolver on K restricted to the mean-zero basis
    ref = np.sort(sla.eigvals(it2.K_w).real)
    assert np.allclose(rep.eigenvalues, ref, atol=1e-10)
    assert rep.all_positive and rep.lam_max <= rep.bound + 1e-10
    assert rep.spectral_radius == pytest.approx(np.max(np.abs(1 - ref)))


def test_full_space_K_annihilates_constants(it2, disc2):
    K = it2.K
    assert np.abs(K @ np.ones(len(K))).max() < 1e-10
    assert np.abs(disc2.mass_weights @ K).max() < 1e-10


def test_schur_complement_guard(disc2, monkeypatch):
    import iterproj.modes as modes
    monkeypatch.setattr(modes, "MAX_DENSE_PRESSURE", 5)
    with pytest.raises(ValueError, match="dense limit"):
        schur_complement(disc2, 1e-3, 1.0)
    assert MAX_DENSE_PRESSURE == 2000


def test_iteration_matrix_rejects_zero_weights(disc2):
    with pytest.raises(ValueError):
        build_iteration_matrix(disc2, 0.0, 0.0, 1e-3, 1.0)


def test_weak_div_bounded_by_kappa_times_increment(disc2, it2):
    prob = problem1_spec(1.0)
    F, p0, w = stokes_step_data(prob, disc2, 1e-3)
    prm = SolverParams(alpha=1.5, rho=1.0, nu=1.0, k=1e-3, eps=1e-30, iter_max=15,
                       convection="NONE", linear_solver="direct", poisson_tol=1e-14, mass_tol=1e-14)
    _, _, rep = ProjectionSolver(disc2, prm).solve_time_step(F, p0, w)
    kappa = weak_div_constant(it2)
    for r in rep.records:
        assert r.weak_div <= kappa * r.dp_max * (1 + 1e-6) + 1e-14


def test_single_projection_not_weakly_solenoidal(disc2):
    rep = single_projection_nondivfree_check(disc2)
    assert rep.div_after >= 1e-3 * rep.div_before
    assert rep.ratio < 1
