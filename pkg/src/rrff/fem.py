"""Lagrange P1 recovery maps on 1D interval meshes and 2D triangulations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, QhullError

BARY_TOL = -1e-10
DUPLICATE_TOL = 1e-12


class MeshError(ValueError):
    """Invalid mesh construction input."""


class OutOfDomainError(ValueError):
    """Query point outside the mesh's covered region."""

    def __init__(self, point):
        self.point = np.asarray(point, dtype=float)
        super().__init__(f"query point {self.point.tolist()} outside the mesh")


@dataclass(frozen=True)
class Mesh1D:
    nodes: np.ndarray  # strictly increasing
    order: np.ndarray  # permutation from input order to sorted order

    @property
    def n_nodes(self) -> int:
        return self.nodes.size


@dataclass(frozen=True)
class Mesh2D:
    nodes: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (t, 3), positively oriented
    # per-triangle inverse affine maps for barycentric coordinates
    _transforms: np.ndarray = field(repr=False, default=None)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]


def build_mesh_1d(points) -> Mesh1D:
    pts = np.asarray(points, dtype=float).ravel()
    if pts.size < 2:
        raise MeshError("need at least 2 points for a 1D mesh")
    order = np.argsort(pts, kind="stable")
    nodes = pts[order]
    if np.any(np.diff(nodes) <= DUPLICATE_TOL):
        raise MeshError("duplicate points in 1D mesh input")
    return Mesh1D(nodes=nodes, order=order)


def _triangle_transforms(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """For each triangle, the 2x2 inverse of [p1-p0, p2-p0] plus the origin
    p0, packed as (t, 3, 2): rows 0-1 the inverse map, row 2 the origin."""
    p0 = nodes[triangles[:, 0]]
    e1 = nodes[triangles[:, 1]] - p0
    e2 = nodes[triangles[:, 2]] - p0
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    inv = np.empty((triangles.shape[0], 3, 2))
    inv[:, 0, 0] = e2[:, 1] / det
    inv[:, 0, 1] = -e2[:, 0] / det
    inv[:, 1, 0] = -e1[:, 1] / det
    inv[:, 1, 1] = e1[:, 0] / det
    inv[:, 2, :] = p0
    return inv


def triangulate_2d(points) -> Mesh2D:
    """Delaunay triangulation of the point set (empty-circumcircle property
    up to predicate tolerance)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise MeshError(f"expected (n, 2) points, got shape {pts.shape}")
    if pts.shape[0] < 3:
        raise MeshError("need at least 3 points to triangulate")
    diffs = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diffs**2).sum(-1))
    np.fill_diagonal(dist, np.inf)
    if dist.min() <= DUPLICATE_TOL:
        raise MeshError("duplicate points in triangulation input")
    try:
        tri = Delaunay(pts)
    except QhullError as exc:
        raise MeshError(f"degenerate point set: {exc}") from exc
    if tri.coplanar.size:
        raise MeshError("some points could not be included in the triangulation")
    simplices = tri.simplices.copy()
    # enforce positive signed area
    p0 = pts[simplices[:, 0]]
    e1 = pts[simplices[:, 1]] - p0
    e2 = pts[simplices[:, 2]] - p0
    neg = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
    simplices[neg] = simplices[neg][:, [0, 2, 1]]
    return Mesh2D(
        nodes=pts,
        triangles=simplices,
        _transforms=_triangle_transforms(pts, simplices),
    )


@dataclass(frozen=True)
class Interpolant:
    mesh: Mesh1D | Mesh2D
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape[-1] != self.mesh.n_nodes:
            raise ValueError(
                f"{vals.shape[-1]} values for {self.mesh.n_nodes} nodes"
            )
        object.__setattr__(self, "values", vals)


def locate(mesh: Mesh2D, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Brute-force point location: for each query, the containing triangle
    index and its barycentric coordinates (tolerance BARY_TOL)."""
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    nq = q.shape[0]
    tri_idx = np.full(nq, -1, dtype=int)
    bary = np.zeros((nq, 3))
    pending = np.ones(nq, dtype=bool)
    for t in range(mesh.triangles.shape[0]):
        if not pending.any():
            break
        inv = mesh._transforms[t]
        rel = q[pending] - inv[2]
        l1 = rel @ inv[0]
        l2 = rel @ inv[1]
        l0 = 1.0 - l1 - l2
        inside = (l0 >= BARY_TOL) & (l1 >= BARY_TOL) & (l2 >= BARY_TOL)
        sel = np.flatnonzero(pending)[inside]
        tri_idx[sel] = t
        bary[sel, 0] = l0[inside]
        bary[sel, 1] = l1[inside]
        bary[sel, 2] = l2[inside]
        pending[sel] = False
    if pending.any():
        raise OutOfDomainError(q[np.argmax(pending)])
    return tri_idx, bary


def interpolate(interp: Interpolant, queries) -> np.ndarray:
    """Piecewise-linear evaluation at the query points.

    1D uses linear blending on the containing interval; 2D uses barycentric
    coordinates from brute-force triangle location. Queries outside the
    covered region raise OutOfDomainError (no extrapolation).
    """
    mesh = interp.mesh
    if isinstance(mesh, Mesh1D):
        q = np.asarray(queries, dtype=float).ravel()
        lo, hi = mesh.nodes[0], mesh.nodes[-1]
        bad = (q < lo) | (q > hi)
        if bad.any():
            raise OutOfDomainError(q[np.argmax(bad)])
        return np.interp(q, mesh.nodes, interp.values)
    tri_idx, bary = locate(mesh, queries)
    nodal = interp.values[mesh.triangles[tri_idx]]
    return (nodal * bary).sum(axis=1)
