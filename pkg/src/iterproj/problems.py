"""Benchmark problems: a manufactured 3D solution and the lid-driven cavity."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .mesh import FACE_TAGS, build_gauss_lobatto_mesh, build_uniform_cube_mesh


# g(x) = 10 x^2 (1-x)^2 and derivatives
def _g(x):
    return 10.0 * x**2 * (1.0 - x) ** 2


def _g1(x):
    return 20.0 * x * (1.0 - x) * (1.0 - 2.0 * x)


def _g2(x):
    return 20.0 * (1.0 - 6.0 * x + 6.0 * x**2)


def _g3(x):
    return 240.0 * x - 120.0


def _split(X):
    X = np.asarray(X, float)
    return X[..., 0], X[..., 1], X[..., 2]


def problem1_velocity(t, X):
    x, y, z = _split(X)
    c = np.cos(t)
    return np.stack([
        c * _g(x) * _g1(y) * _g1(z),
        c * _g1(x) * _g(y) * _g1(z),
        -2.0 * c * _g1(x) * _g1(y) * _g(z),
    ], axis=-1)


def problem1_pressure(t, X):
    x, y, z = _split(X)
    return np.cos(3.0 * t) * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y) * z**3


def problem1_exact(t, X):
    """(u, p) of the manufactured solution at points X (..., 3)."""
    return problem1_velocity(t, X), problem1_pressure(t, X)


def problem1_velocity_grad(t, X):
    """J[..., i, j] = d u_i / d x_j."""
    x, y, z = _split(X)
    c = np.cos(t)
    g, g1, g2 = (_g(x), _g(y), _g(z)), (_g1(x), _g1(y), _g1(z)), (_g2(x), _g2(y), _g2(z))
    J = np.empty(np.shape(x) + (3, 3))
    J[..., 0, 0] = c * g1[0] * g1[1] * g1[2]
    J[..., 0, 1] = c * g[0] * g2[1] * g1[2]
    J[..., 0, 2] = c * g[0] * g1[1] * g2[2]
    J[..., 1, 0] = c * g2[0] * g[1] * g1[2]
    J[..., 1, 1] = c * g1[0] * g1[1] * g1[2]
    J[..., 1, 2] = c * g1[0] * g[1] * g2[2]
    J[..., 2, 0] = -2.0 * c * g2[0] * g1[1] * g[2]
    J[..., 2, 1] = -2.0 * c * g1[0] * g2[1] * g[2]
    J[..., 2, 2] = -2.0 * c * g1[0] * g1[1] * g1[2]
    return J


def problem1_velocity_laplacian(t, X):
    x, y, z = _split(X)
    c = np.cos(t)
    return np.stack([
        c * (_g2(x) * _g1(y) * _g1(z) + _g(x) * _g3(y) * _g1(z) + _g(x) * _g1(y) * _g3(z)),
        c * (_g3(x) * _g(y) * _g1(z) + _g1(x) * _g2(y) * _g1(z) + _g1(x) * _g(y) * _g3(z)),
        -2.0 * c * (_g3(x) * _g1(y) * _g(z) + _g1(x) * _g3(y) * _g(z) + _g1(x) * _g1(y) * _g2(z)),
    ], axis=-1)


def problem1_pressure_grad(t, X):
    x, y, z = _split(X)
    a = np.cos(3.0 * t)
    sx, sy = np.sin(2 * np.pi * x), np.sin(2 * np.pi * y)
    cx, cy = np.cos(2 * np.pi * x), np.cos(2 * np.pi * y)
    return np.stack([
        a * 2 * np.pi * cx * sy * z**3,
        a * 2 * np.pi * sx * cy * z**3,
        a * 3.0 * sx * sy * z**2,
    ], axis=-1)


def problem1_forcing(t, X, nu):
    """f = u_t - nu lap u + (u.grad)u + grad p for the manufactured pair."""
    u = problem1_velocity(t, X)
    u_t = -np.sin(t) * problem1_velocity(0.0, X)
    conv = np.einsum("...ij,...j->...i", problem1_velocity_grad(t, X), u)
    return u_t - nu * problem1_velocity_laplacian(t, X) + conv + problem1_pressure_grad(t, X)


def _zero_field(t, X):
    return np.zeros(np.shape(X))


@dataclass
class ProblemSpec:
    name: str
    nu: float
    box: tuple
    mesh_family: str  # "uniform" | "gauss_lobatto"
    forcing: Callable
    boundary_velocity: Callable  # (points, tags) -> (n, 3)
    startup: str  # "exact" | "copy"
    U: float = 1.0
    velocity: Optional[Callable] = None
    pressure: Optional[Callable] = None
    velocity_grad: Optional[Callable] = None

    @property
    def Re(self) -> float:
        return self.U / self.nu

    @property
    def has_exact(self) -> bool:
        return self.velocity is not None

    def build_mesh(self, N: int):
        if self.mesh_family == "gauss_lobatto":
            return build_gauss_lobatto_mesh(N)
        return build_uniform_cube_mesh(N, self.box)


# sampled maximum of |u| at t = 0 on [0,1]^3 (attained off the lattice; ~4.6)
PROBLEM1_SPEED = 4.6


def problem1_spec(nu: float) -> ProblemSpec:
    return ProblemSpec(
        name="problem1", nu=nu, box=((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)),
        mesh_family="uniform",
        forcing=lambda t, X: problem1_forcing(t, X, nu),
        boundary_velocity=lambda pts, tags: np.zeros((len(pts), 3)),
        startup="exact", U=PROBLEM1_SPEED,
        velocity=problem1_velocity, pressure=problem1_pressure,
        velocity_grad=problem1_velocity_grad,
    )


def cavity_spec(nu: float, lid_edges: str = "lid") -> ProblemSpec:
    """Cube (-0.5, 0.5)^3 with the wall x = -0.5 sliding at (0, 1, 0).

    ``lid_edges="lid"`` gives nodes shared by the lid and a side wall the lid
    velocity; ``"wall"`` gives them zero.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    if lid_edges not in ("lid", "wall"):
        raise ValueError(f"lid_edges must be 'lid' or 'wall', got {lid_edges!r}")
    lid = FACE_TAGS.index("x-")

    def bc(pts, tags):
        tags = np.asarray(tags, bool)
        on = tags[:, lid]
        if lid_edges == "wall":
            on = on & (tags.sum(axis=1) == 1)
        out = np.zeros((len(pts), 3))
        out[on, 1] = 1.0
        return out

    return ProblemSpec(
        name="cavity", nu=nu, box=((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5)),
        mesh_family="gauss_lobatto", forcing=_zero_field, boundary_velocity=bc,
        startup="copy", U=1.0,
    )


def get_problem(name: str, nu: float, **kw) -> ProblemSpec:
    if name == "problem1":
        return problem1_spec(nu)
    if name == "cavity":
        return cavity_spec(nu, **kw)
    raise ValueError(f"unknown problem {name!r}")
