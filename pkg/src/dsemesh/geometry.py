"""Core containers (point clouds, triangle meshes) and small mesh utilities.

Vertex ids always refer to rows of the original input cloud, so a mesh
provably triangulates a subset of the points it was built from. Meshes are
write-once: all containers are frozen after construction and safe to share
across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateGeometryError(ValueError):
    """Input geometry is too degenerate for the requested operation."""


@dataclass(frozen=True)
class PointCloud:
    """Input samples, optionally with reference normals.

    positions : (N, 3) float64
    normals   : (N, 3) float64 unit vectors, or None
    ids       : (N,) int64, dense in [0, N)
    """

    positions: np.ndarray
    normals: np.ndarray | None = None
    ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pos = np.ascontiguousarray(np.asarray(self.positions, dtype=np.float64))
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError(f"positions must be (N, 3), got {pos.shape}")
        object.__setattr__(self, "positions", pos)
        if self.normals is not None:
            nrm = np.ascontiguousarray(np.asarray(self.normals, dtype=np.float64))
            if nrm.shape != pos.shape:
                raise ValueError("normals shape must match positions")
            lengths = np.linalg.norm(nrm, axis=1)
            if len(lengths) and np.max(np.abs(lengths - 1.0)) > 1e-6:
                raise ValueError("normals must have unit length within 1e-6")
            object.__setattr__(self, "normals", nrm)
        if self.ids is None:
            object.__setattr__(self, "ids", np.arange(len(pos), dtype=np.int64))
        else:
            ids = np.asarray(self.ids, dtype=np.int64)
            if not np.array_equal(np.sort(ids), np.arange(len(pos))):
                raise ValueError("point ids must be unique and dense in [0, N)")
            object.__setattr__(self, "ids", ids)

    def __len__(self):
        return len(self.positions)


def canonical_triangle(a: int, b: int, c: int) -> tuple[int, int, int]:
    """Sorted vertex triple; identical for all six permutations of a triangle."""
    if a == b or b == c or a == c:
        raise DegenerateGeometryError(f"degenerate triangle ({a}, {b}, {c})")
    return tuple(sorted((int(a), int(b), int(c))))  # type: ignore[return-value]


@dataclass(frozen=True)
class TriangleMesh:
    """Triangulation of a subset of a point cloud.

    vertex_ids : (V,) int64 ids into the original cloud
    positions  : (V, 3) float64 coordinates of those vertices
    triangles  : (T, 3) int64 ordered triples indexing rows of vertex_ids
    """

    vertex_ids: np.ndarray
    positions: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        vid = np.asarray(self.vertex_ids, dtype=np.int64)
        pos = np.ascontiguousarray(np.asarray(self.positions, dtype=np.float64))
        tri = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if pos.shape != (len(vid), 3):
            raise ValueError("positions must be (V, 3) matching vertex_ids")
        if len(np.unique(vid)) != len(vid):
            raise ValueError("vertex_ids must be unique")
        if len(tri):
            if tri.min() < 0 or tri.max() >= len(vid):
                raise ValueError("triangle index out of range")
            if ((tri[:, 0] == tri[:, 1]) | (tri[:, 1] == tri[:, 2]) | (tri[:, 0] == tri[:, 2])).any():
                raise DegenerateGeometryError("triangle with repeated vertex")
            canon = np.sort(tri, axis=1)
            if len(np.unique(canon, axis=0)) != len(canon):
                raise ValueError("duplicate triangles under canonical ordering")
        object.__setattr__(self, "vertex_ids", vid)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "triangles", tri)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_positions(self) -> np.ndarray:
        """(T, 3, 3) corner coordinates."""
        return self.positions[self.triangles]

    def triangle_areas(self) -> np.ndarray:
        p = self.triangle_positions()
        cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def global_triangles(self) -> np.ndarray:
        """Triangles expressed in original cloud ids."""
        return self.vertex_ids[self.triangles]


def mesh_from_cloud(cloud: PointCloud, global_triangles) -> TriangleMesh:
    """Compact a set of global-id triangles into a TriangleMesh over `cloud`."""
    tri = np.asarray(global_triangles, dtype=np.int64).reshape(-1, 3)
    used = np.unique(tri) if len(tri) else np.empty(0, dtype=np.int64)
    remap = {int(g): i for i, g in enumerate(used)}
    local = np.array([[remap[int(v)] for v in t] for t in tri], dtype=np.int64).reshape(-1, 3)
    return TriangleMesh(vertex_ids=used, positions=cloud.positions[used], triangles=local)


@dataclass(frozen=True)
class EdgeAdjacency:
    """Unordered vertex pair -> indices of incident triangles."""

    incidence: dict[tuple[int, int], list[int]]

    def count(self, u: int, v: int) -> int:
        key = (u, v) if u < v else (v, u)
        return len(self.incidence.get(key, ()))

    @property
    def edges(self):
        return self.incidence.keys()


def build_edge_adjacency(mesh: TriangleMesh) -> EdgeAdjacency:
    """Collect, for every edge of every triangle, the triangles incident to it."""
    incidence: dict[tuple[int, int], list[int]] = {}
    for t, (a, b, c) in enumerate(mesh.triangles):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (int(u), int(v)) if u < v else (int(v), int(u))
            incidence.setdefault(key, []).append(t)
    return EdgeAdjacency(incidence)


def sample_surface(mesh: TriangleMesh, n: int, seed: int) -> PointCloud:
    """Draw n area-uniform surface samples, deterministic for a fixed seed.

    Triangles are chosen with probability proportional to area and points are
    barycentric-uniform within each triangle. Normals of the parent triangles
    are attached to the samples.
    """
    if mesh.n_triangles == 0:
        raise DegenerateGeometryError("cannot sample an empty mesh")
    if n < 0:
        raise ValueError("n must be non-negative")
    areas = mesh.triangle_areas()
    if not np.all(np.isfinite(areas)):
        raise DegenerateGeometryError("non-finite triangle area")
    total = areas.sum()
    if total <= 0.0:
        raise DegenerateGeometryError("mesh has zero total area")
    if n == 0:
        return PointCloud(positions=np.empty((0, 3)), normals=np.empty((0, 3)))
    rng = np.random.default_rng(seed)
    choice = rng.choice(len(areas), size=n, p=areas / total)
    corners = mesh.triangle_positions()[choice]
    uv = rng.random((n, 2))
    flip = uv.sum(axis=1) > 1.0
    uv[flip] = 1.0 - uv[flip]
    u, v = uv[:, 0:1], uv[:, 1:2]
    pts = corners[:, 0] + u * (corners[:, 1] - corners[:, 0]) + v * (corners[:, 2] - corners[:, 0])
    nrm = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    lens = np.linalg.norm(nrm, axis=1, keepdims=True)
    lens[lens == 0.0] = 1.0
    return PointCloud(positions=pts, normals=nrm / lens)


def estimate_normal_pca(points) -> np.ndarray:
    """Unit normal of the best-fit plane through `points`.

    The eigenvector of the covariance matrix with the smallest eigenvalue,
    with the sign fixed so the dot with +z is non-negative (ties broken
    toward +y, then +x). Raises on collinear or otherwise rank-deficient
    input where the normal direction is not unique.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) < 3:
        raise DegenerateGeometryError("need at least 3 points for a plane fit")
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / len(pts)
    evals, evecs = np.linalg.eigh(cov)
    # eigh returns ascending eigenvalues; collinear input leaves the two
    # smallest both ~0 and the plane normal undetermined
    scale = max(evals[2], 0.0)
    if scale <= 0.0 or evals[1] <= 1e-10 * scale:
        raise DegenerateGeometryError("points are collinear or coincident")
    normal = evecs[:, 0]
    return orient_normal_sign(normal)


def orient_normal_sign(normal: np.ndarray) -> np.ndarray:
    """Fix the sign of a unit normal: non-negative z, then y, then x."""
    n = np.asarray(normal, dtype=np.float64)
    for axis in (2, 1, 0):
        if n[axis] > 0.0:
            return n
        if n[axis] < 0.0:
            return -n
    return n


def tangent_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal in-plane basis (t1, t2) with t1 x t2 = normal.

    t1 is the in-plane projection of the coordinate axis most orthogonal to
    the normal, which keeps the basis stable under small normal
    perturbations and makes the chart of the z=0 plane the identity.
    """
    n = np.asarray(normal, dtype=np.float64)
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(n)))] = 1.0
    t1 = axis - float(axis @ n) * n
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return t1, t2
