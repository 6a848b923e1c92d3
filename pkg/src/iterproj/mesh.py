"""Structured tetrahedral meshes of a box.

Each hexahedral cell of a tensor lattice is cut into six tetrahedra that all
share the cell diagonal from the lowest to the highest corner (Kuhn split).
Because every cell uses the same diagonal direction, the face diagonals of
neighbouring cells match and the mesh is conforming.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

FACE_TAGS = ("x-", "x+", "y-", "y+", "z-", "z+")

# local edge ordering shared with the P2 basis
LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class Mesh:
    """Conforming tetrahedral mesh with P2 edge midpoints.

    ``nodes`` holds the primary (vertex) nodes; ``p2_nodes`` appends one
    midpoint per geometric edge, so midpoint of edge ``e`` has index
    ``n_nodes + e``.
    """

    nodes: np.ndarray
    tets: np.ndarray
    edges: np.ndarray
    tet_edges: np.ndarray
    box: tuple
    boundary: np.ndarray = field(repr=False)
    axes: tuple = field(repr=False, default=())

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_p2(self) -> int:
        return len(self.nodes) + len(self.edges)

    @property
    def p2_nodes(self) -> np.ndarray:
        mid = 0.5 * (self.nodes[self.edges[:, 0]] + self.nodes[self.edges[:, 1]])
        return np.vstack([self.nodes, mid])

    @property
    def p2_cells(self) -> np.ndarray:
        """(n_tets, 10) global P2 node indices: 4 vertices then 6 edge midpoints."""
        return np.hstack([self.tets, self.n_nodes + self.tet_edges])

    @property
    def h(self) -> float:
        """Largest lattice spacing."""
        return max(float(np.max(np.diff(a))) for a in self.axes) if self.axes else np.nan

    def signed_volumes(self) -> np.ndarray:
        x = self.nodes[self.tets]
        return np.linalg.det(x[:, 1:] - x[:, :1]) / 6.0

    def box_volume(self) -> float:
        lo, hi = (np.asarray(c, float) for c in self.box)
        return float(np.prod(hi - lo))

    def boundary_tags(self, i: int) -> frozenset:
        return frozenset(t for t, on in zip(FACE_TAGS, self.boundary[i]) if on)

    def boundary_p2(self) -> np.ndarray:
        """Indices of P2 nodes touching any face of the box."""
        return np.flatnonzero(self.boundary.any(axis=1))

    def dump(self, path) -> None:
        """Plain-text listing: node count, nodes, tet count, tets."""
        with open(path, "w") as fh:
            fh.write(f"{self.n_nodes}\n")
            np.savetxt(fh, self.nodes, fmt="%.17g")
            fh.write(f"{len(self.tets)}\n")
            np.savetxt(fh, self.tets, fmt="%d")


def _kuhn_tets(nx: int, ny: int, nz: int) -> np.ndarray:
    ix, iy, iz = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    ix, iy, iz = ix.ravel(), iy.ravel(), iz.ravel()

    def vid(i, j, k):
        return (i * (ny + 1) + j) * (nz + 1) + k

    tets = []
    for perm in permutations(range(3)):
        corner = np.zeros((len(ix), 3), dtype=np.int64)
        verts = [vid(ix, iy, iz)]
        for axis in perm:
            corner[:, axis] += 1
            verts.append(vid(ix + corner[:, 0], iy + corner[:, 1], iz + corner[:, 2]))
        tets.append(np.stack(verts, axis=1))
    # cell-major ordering
    return np.stack(tets, axis=1).reshape(-1, 4)


def _from_axes(x: np.ndarray, y: np.ndarray, z: np.ndarray) -> Mesh:
    X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    tets = _kuhn_tets(len(x) - 1, len(y) - 1, len(z) - 1)

    pts = nodes[tets]
    vol = np.linalg.det(pts[:, 1:] - pts[:, :1])
    flip = vol < 0
    tets[flip, 2], tets[flip, 3] = tets[flip, 3].copy(), tets[flip, 2].copy()

    local = np.array(LOCAL_EDGES)
    all_edges = np.sort(tets[:, local], axis=2).reshape(-1, 2)
    edges, inverse = np.unique(all_edges, axis=0, return_inverse=True)
    tet_edges = inverse.reshape(len(tets), 6)

    box = ((x[0], y[0], z[0]), (x[-1], y[-1], z[-1]))
    partial = Mesh(nodes, tets, edges, tet_edges, box, boundary=np.zeros((0, 6), bool),
                   axes=(x, y, z))
    return Mesh(nodes, tets, edges, tet_edges, box,
                boundary=classify_boundary(partial), axes=(x, y, z))


def build_uniform_cube_mesh(N: int, box=((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))) -> Mesh:
    """Uniform N x N x N lattice of ``box`` split into 6 N^3 tetrahedra."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    lo, hi = (np.asarray(c, float) for c in box)
    axes = [np.linspace(lo[d], hi[d], N + 1) for d in range(3)]
    return _from_axes(*axes)


def gauss_lobatto_axis(N: int) -> np.ndarray:
    return np.sort(0.5 * np.cos(np.arange(N + 1) * np.pi / N))


def build_gauss_lobatto_mesh(N: int) -> Mesh:
    """Cavity mesh on (-0.5, 0.5)^3, graded toward the walls in x and y.

    The z-direction is uniform; see the notes in the README on why the
    graded formula is not applied there.
    """
    if int(N) != N or N < 2:
        raise ValueError(f"N must be an integer >= 2, got {N!r}")
    x = gauss_lobatto_axis(N)
    # exact endpoints and symmetric zero
    x[0], x[-1] = -0.5, 0.5
    x[np.abs(x) < 1e-15] = 0.0
    z = np.arange(N + 1) / N - 0.5
    return _from_axes(x, x.copy(), z)


def classify_boundary(mesh: Mesh) -> np.ndarray:
    """Boolean (n_p2, 6) array of face memberships in FACE_TAGS order."""
    pts = mesh.p2_nodes
    lo, hi = (np.asarray(c, float) for c in mesh.box)
    tags = np.zeros((len(pts), 6), dtype=bool)
    for d in range(3):
        tags[:, 2 * d] = np.abs(pts[:, d] - lo[d]) <= BOUNDARY_TOL
        tags[:, 2 * d + 1] = np.abs(pts[:, d] - hi[d]) <= BOUNDARY_TOL
    return tags


def boundary_faces(mesh: Mesh) -> np.ndarray:
    """Triangles that belong to exactly one tet, as sorted node triples."""
    faces = np.sort(mesh.tets[:, [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]], axis=2).reshape(-1, 3)
    uniq, counts = np.unique(faces, axis=0, return_counts=True)
    return uniq[counts == 1]
