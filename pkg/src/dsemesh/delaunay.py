"""Incremental 2D Delaunay triangulation and umbrella extraction.

Bowyer-Watson insertion with ghost triangles standing in for the region
outside the convex hull. All cavity decisions go through the exact
predicates, so the empty-circumcircle property holds bit-for-bit and
co-circular inputs resolve deterministically via per-point perturbation
keys. Points closer than a relative 1e-12 are merged to the lower index
before triangulating.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import DegenerateGeometryError, canonical_triangle
from .predicates import incircle_filter_batch, incircle_perturbed, orient2d

GHOST = -1


@dataclass(frozen=True)
class Triangulation2D:
    """Delaunay triangulation of a 2D point set.

    points    : (n, 2) input coordinates (including merged duplicates)
    triangles : (t, 3) CCW triples indexing `points`
    on_hull   : (n,) bool, True for points on the convex hull
    merged_into : map from a dropped duplicate index to its representative
    """

    points: np.ndarray
    triangles: np.ndarray
    on_hull: np.ndarray
    merged_into: dict[int, int] = field(default_factory=dict)


def _merge_duplicates(points: np.ndarray) -> tuple[np.ndarray, dict[int, int]]:
    n = len(points)
    scale = float(np.max(np.abs(points))) if n else 0.0
    tol = 1e-12 * max(scale, 1e-300)
    merged: dict[int, int] = {}
    keep: list[int] = []
    for i in range(n):
        target = -1
        for j in keep:
            d = points[i] - points[j]
            if d[0] * d[0] + d[1] * d[1] <= tol * tol:
                target = j
                break
        if target >= 0:
            merged[i] = target
        else:
            keep.append(i)
    return np.array(keep, dtype=np.int64), merged


class _Mesh:
    """Mutable triangle soup with directed-edge lookup, ghosts included."""

    def __init__(self):
        self.tris: set[tuple[int, int, int]] = set()
        self.edge: dict[tuple[int, int], tuple[int, int, int]] = {}

    def add(self, a, b, c):
        t = (a, b, c)
        self.tris.add(t)
        self.edge[(a, b)] = t
        self.edge[(b, c)] = t
        self.edge[(c, a)] = t

    def remove(self, t):
        a, b, c = t
        self.tris.discard(t)
        for e in ((a, b), (b, c), (c, a)):
            if self.edge.get(e) == t:
                del self.edge[e]


def _ghost_sees(points, a, b, p) -> bool:
    """Whether query p falls in the outside region owned by hull edge a->b.

    The triangulation interior lies to the left of a->b. Strictly right is
    outside; exactly on the supporting line counts only when p falls within
    the open segment (the point splits the hull edge in place).
    """
    s = orient2d(points[a], points[b], p)
    if s < 0:
        return True
    if s > 0:
        return False
    ab = points[b] - points[a]
    ap = np.asarray(p, dtype=np.float64) - points[a]
    t = float(ab @ ap)
    return 0.0 < t < float(ab @ ab)


def delaunay2d(points, keys=None) -> Triangulation2D:
    """Delaunay-triangulate 2D points with exact predicates.

    keys, when given, are per-point integers used to order the symbolic
    perturbation that resolves co-circular ties; passing globally stable
    keys makes triangulations of overlapping subsets agree on shared
    degenerate quadruples. Defaults to the local point index.
    """
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 2))
    n = len(pts)
    if n < 3:
        raise DegenerateGeometryError("need at least 3 points")
    if keys is None:
        key_arr = np.arange(n, dtype=np.int64)
    else:
        key_arr = np.asarray(keys, dtype=np.int64)
        if key_arr.shape != (n,):
            raise ValueError("keys must have one entry per point")
        if len(np.unique(key_arr)) != n:
            raise ValueError("perturbation keys must be unique")

    live, merged = _merge_duplicates(pts)
    order = list(live)
    if len(order) < 3:
        raise DegenerateGeometryError("fewer than 3 distinct points")

    # bootstrap on the first non-collinear triple, in index order
    i0, i1 = order[0], order[1]
    i2 = None
    for idx in order[2:]:
        if orient2d(pts[i0], pts[i1], pts[idx]) != 0:
            i2 = idx
            break
    if i2 is None:
        raise DegenerateGeometryError("all points are collinear")
    if orient2d(pts[i0], pts[i1], pts[i2]) < 0:
        i0, i1 = i1, i0
    mesh = _Mesh()
    mesh.add(i0, i1, i2)
    mesh.add(i1, i0, GHOST)
    mesh.add(i2, i1, GHOST)
    mesh.add(i0, i2, GHOST)

    for idx in order[2:]:
        if idx == i2:
            continue
        _insert(mesh, pts, key_arr, idx)

    triangles = []
    hull = np.zeros(n, dtype=bool)
    for t in mesh.tris:
        if GHOST in t:
            for v in t:
                if v != GHOST:
                    hull[v] = True
        else:
            triangles.append(t)
    triangles.sort()
    tri_arr = (
        np.array(triangles, dtype=np.int64)
        if triangles
        else np.empty((0, 3), dtype=np.int64)
    )
    return Triangulation2D(points=pts, triangles=tri_arr, on_hull=hull, merged_into=merged)


def _insert(mesh, pts, keys, idx):
    p = pts[idx]
    real = [t for t in mesh.tris if GHOST not in t]
    cavity = set()
    if real:
        arr = np.array(real, dtype=np.int64)
        signs, ambiguous = incircle_filter_batch(
            pts[arr[:, 0]], pts[arr[:, 1]], pts[arr[:, 2]], p
        )
        for t, s, amb in zip(real, signs, ambiguous):
            if amb:
                s = incircle_perturbed(
                    pts[t[0]], pts[t[1]], pts[t[2]], p,
                    int(keys[t[0]]), int(keys[t[1]]), int(keys[t[2]]), int(keys[idx]),
                )
            if s > 0:
                cavity.add(t)
    for t in mesh.tris:
        if GHOST in t:
            a, b = _finite_edge(t)
            # stored ghost (u, v, GHOST) guards hull edge v->u (interior left)
            if _ghost_sees(pts, b, a, p):
                cavity.add(t)
    if not cavity:
        raise ArithmeticError("insertion cavity is empty; predicates inconsistent")

    boundary = []
    for t in cavity:
        a, b, c = t
        for e in ((a, b), (b, c), (c, a)):
            rev = (e[1], e[0])
            if mesh.edge.get(rev) not in cavity:
                boundary.append(e)
    for t in list(cavity):
        mesh.remove(t)
    for u, v in boundary:
        mesh.add(u, v, idx)


def _finite_edge(ghost_tri):
    a, b, c = ghost_tri
    if a == GHOST:
        return b, c
    if b == GHOST:
        return c, a
    return a, b


@dataclass(frozen=True)
class DelaunaySurfaceElement:
    """Umbrella of Delaunay triangles around a patch center, in global ids.

    triangles  : canonical (sorted) global triples, each containing center_id
    min_angles : per-triangle minimum interior angle (degrees) in the 2D chart
    boundary   : center sat on the convex hull of its own chart (open fan)
    """

    center_id: int
    triangles: tuple[tuple[int, int, int], ...]
    min_angles: tuple[float, ...]
    boundary: bool

    @property
    def empty(self) -> bool:
        return len(self.triangles) == 0


def _min_angle_deg(p0, p1, p2) -> float:
    a = np.linalg.norm(p1 - p2)
    b = np.linalg.norm(p0 - p2)
    c = np.linalg.norm(p0 - p1)
    angles = []
    for opp, e1, e2 in ((a, b, c), (b, a, c), (c, a, b)):
        denom = 2.0 * e1 * e2
        if denom == 0.0:
            return 0.0
        cosv = np.clip((e1 * e1 + e2 * e2 - opp * opp) / denom, -1.0, 1.0)
        angles.append(np.degrees(np.arccos(cosv)))
    return float(min(angles))


def extract_dse(tri: Triangulation2D, center: int, id_map) -> DelaunaySurfaceElement:
    """Collect the triangles incident to `center` as a surface element.

    id_map maps local point indices to global cloud ids. A center merged
    away as a duplicate, or one with no incident triangles, yields an empty
    element.
    """
    id_map = np.asarray(id_map, dtype=np.int64)
    if center < 0 or center >= len(tri.points):
        raise IndexError("center index out of range")
    center_global = int(id_map[center])
    if center in tri.merged_into:
        return DelaunaySurfaceElement(center_global, (), (), boundary=False)
    triples = []
    angles = []
    for t in tri.triangles:
        if center in t:
            a, b, c = (int(id_map[v]) for v in t)
            triples.append(canonical_triangle(a, b, c))
            angles.append(_min_angle_deg(tri.points[t[0]], tri.points[t[1]], tri.points[t[2]]))
    return DelaunaySurfaceElement(
        center_id=center_global,
        triangles=tuple(triples),
        min_angles=tuple(angles),
        boundary=bool(tri.on_hull[center]),
    )
