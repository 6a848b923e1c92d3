import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from iterproj.mesh import FACE_TAGS
from iterproj.problems import (PROBLEM1_SPEED, cavity_spec, get_problem, problem1_forcing,
                               problem1_pressure, problem1_spec, problem1_velocity,
                               problem1_velocity_grad)

H = 1e-3


def richardson(fun, X, d, h=H):
    """Fourth-order central difference along coordinate d."""
    e = np.zeros(3)
    e[d] = 1.0

    def c(s):
        return (fun(X + s * e) - fun(X - s * e)) / (2 * s)
    return (4 * c(h / 2) - c(h)) / 3


def fd_grad(fun, X):
    return np.stack([richardson(fun, X, d) for d in range(3)], axis=-1)


points = arrays(float, (6, 3), elements=st.floats(0.05, 0.95))


@given(points, st.floats(0.0, 3.0))
@settings(max_examples=20, deadline=None)
def test_velocity_gradient_and_divergence(X, t):
    J = problem1_velocity_grad(t, X)
    assert np.allclose(J, fd_grad(lambda Y: problem1_velocity(t, Y), X), atol=1e-7)
    assert np.allclose(np.trace(J, axis1=-2, axis2=-1), 0.0, atol=1e-12)


@given(points, st.floats(0.0, 3.0), st.sampled_from([1.0, 1e-3]))
@settings(max_examples=20, deadline=None)
def test_forcing_against_finite_differences(X, t, nu):
    u = problem1_velocity(t, X)
    u_t = (problem1_velocity(t + H / 2, X) - problem1_velocity(t - H / 2, X)) / H
    u_t2 = (problem1_velocity(t + H / 4, X) - problem1_velocity(t - H / 4, X)) / (H / 2)
    u_t = (4 * u_t2 - u_t) / 3
    lap = np.zeros_like(u)
    for d in range(3):
        lap += richardson(lambda Y: richardson(lambda Z: problem1_velocity(t, Z), Y, d), X, d)
    gp = fd_grad(lambda Y: problem1_pressure(t, Y), X)
    conv = np.einsum("nij,nj->ni", problem1_velocity_grad(t, X), u)
    expect = u_t - nu * lap + conv + gp
    assert np.allclose(problem1_forcing(t, X, nu), expect, rtol=1e-6, atol=1e-5)


def test_velocity_vanishes_on_boundary(rng):
    for d in range(3):
        for side in (0.0, 1.0):
            X = rng.uniform(0, 1, size=(50, 3))
            X[:, d] = side
            assert np.abs(problem1_velocity(0.7, X)).max() < 1e-14


def test_speed_scale():
    g = np.linspace(0, 1, 41)
    X = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
    speed = np.linalg.norm(problem1_velocity(0.0, X), axis=1).max()
    assert speed == pytest.approx(PROBLEM1_SPEED, rel=0.02)
    assert problem1_spec(0.1).Re == pytest.approx(PROBLEM1_SPEED / 0.1)


@pytest.mark.parametrize("edges", ["lid", "wall"])
def test_cavity_boundary(edges):
    spec = cavity_spec(0.01, lid_edges=edges)
    assert spec.Re == pytest.approx(100.0)
    tags = np.zeros((3, 6), bool)
    tags[0, FACE_TAGS.index("x-")] = True
    tags[1, [FACE_TAGS.index("x-"), FACE_TAGS.index("y+")]] = True
    tags[2, FACE_TAGS.index("z+")] = True
    bc = spec.boundary_velocity(np.zeros((3, 3)), tags)
    assert np.array_equal(bc[0], [0, 1, 0])
    assert np.array_equal(bc[1], [0, 1, 0] if edges == "lid" else [0, 0, 0])
    assert not bc[2].any()
    assert not spec.has_exact


def test_get_problem_errors():
    assert get_problem("problem1", 1.0).name == "problem1"
    with pytest.raises(ValueError):
        get_problem("channel", 1.0)
    with pytest.raises(ValueError):
        cavity_spec(0.0)
    with pytest.raises(ValueError):
        cavity_spec(0.1, lid_edges="corner")
