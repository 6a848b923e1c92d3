from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iterproj.mesh import build_uniform_cube_mesh
from iterproj.spaces import (FEGeometry, eval_p1_basis, eval_p2_basis, interpolate_pressure,
                             interpolate_velocity, keast_quadrature, make_layout)

REF_NODES = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1],
                      [.5, 0, 0], [0, .5, 0], [0, 0, .5], [.5, .5, 0], [.5, 0, .5], [0, .5, .5]])


def exact_monomial(a, b, c):
    return factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)


def test_quadrature_monomials():
    q = keast_quadrature()
    assert len(q.weights) == 24
    x, y, z = q.points.T
    worst = 0.0
    for a in range(7):
        for b in range(7 - a):
            for c in range(7 - a - b):
                worst = max(worst, abs(q.weights @ (x**a * y**b * z**c) - exact_monomial(a, b, c)))
    assert worst < 1e-14


def test_quadrature_points_inside():
    q = keast_quadrature()
    lam = np.column_stack([1 - q.points.sum(axis=1), q.points])
    assert np.all(lam > 0)


@given(st.lists(st.floats(0, 1), min_size=3, max_size=3).filter(lambda v: sum(v) <= 1))
@settings(max_examples=40, deadline=None)
def test_partition_of_unity(pt):
    pt = np.array([pt])
    v2, g2 = eval_p2_basis(pt)
    v1, g1 = eval_p1_basis(pt)
    assert v2.sum() == pytest.approx(1.0, abs=1e-13)
    assert v1.sum() == pytest.approx(1.0, abs=1e-13)
    assert np.allclose(g2.sum(axis=1), 0.0, atol=1e-12)
    assert np.allclose(g1.sum(axis=1), 0.0, atol=1e-12)


def test_p2_nodal_property():
    v, _ = eval_p2_basis(REF_NODES)
    assert np.allclose(v, np.eye(10), atol=1e-14)


def test_p2_gradient_finite_difference(rng):
    pts = rng.uniform(0.05, 0.25, size=(5, 3))
    _, g = eval_p2_basis(pts)
    h = 1e-6
    for d in range(3):
        e = np.zeros(3)
        e[d] = h
        fd = (eval_p2_basis(pts + e)[0] - eval_p2_basis(pts - e)[0]) / (2 * h)
        assert np.allclose(g[..., d], fd, atol=1e-8)


def test_geometry_volume_and_degenerate(mesh2):
    geo = FEGeometry(mesh2)
    assert geo.wdet.sum() == pytest.approx(1.0, rel=1e-13)
    bad = build_uniform_cube_mesh(1)
    nodes = bad.nodes.copy()
    nodes[:, 2] = 0.0
    from dataclasses import replace
    with pytest.raises(ValueError, match="degenerate"):
        FEGeometry(replace(bad, nodes=nodes))


def test_quadratic_interpolation_exact(mesh2):
    geo = FEGeometry(mesh2)
    f = lambda X: np.stack([X[..., 0] ** 2, X[..., 0] * X[..., 1], 1 - X[..., 2]], axis=-1)
    u = interpolate_velocity(mesh2, f)
    vals, grads = geo.velocity_at_quad(u)
    X = geo.qpoints
    assert np.allclose(vals, f(X), atol=1e-13)
    assert np.allclose(grads[..., 0, 0], 2 * X[..., 0], atol=1e-12)
    assert np.allclose(grads[..., 1, 1], X[..., 0], atol=1e-12)
    p = interpolate_pressure(mesh2, lambda X: 1 + X[..., 0] - 2 * X[..., 2])
    assert np.allclose(geo.pressure_at_quad(p), 1 + X[..., 0] - 2 * X[..., 2], atol=1e-13)


def test_layout(mesh2):
    lay = make_layout(mesh2, lambda pts, tags: np.tile([1.0, 2.0, 3.0], (len(pts), 1)))
    n_b = len(mesh2.boundary_p2())
    assert lay.dirichlet_mask.sum() == 3 * n_b
    assert not lay.homogeneous
    assert lay.free.size + lay.fixed.size == lay.n_velocity
    assert make_layout(mesh2).homogeneous
