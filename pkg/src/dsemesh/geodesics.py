"""Discrete geodesic distances and ground-truth log maps on reference meshes.

Distances are Dijkstra shortest paths over the mesh edge graph augmented
with one extra edge per pair of adjacent triangles: the straight segment
between their opposite vertices after unfolding the pair into a plane,
added only when that segment actually crosses the shared edge. The
augmentation substantially reduces the usual graph-metric overshoot.

The angular coordinate of a neighbor is the direction of the first edge of
its shortest path leaving the center, measured in the center's tangent
plane after uniformly rescaling the one-ring wedge angles to total 2 pi.
Log maps from this construction are only defined up to a global rotation
per center.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .geometry import (
    DegenerateGeometryError,
    TriangleMesh,
    build_edge_adjacency,
    tangent_basis,
)


class GeodesicError(ValueError):
    pass


@dataclass(frozen=True)
class GroundTruthLogMap:
    """2D chart of the k geodesically nearest vertices around a center.

    coords[j] has radius equal to the geodesic distance of neighbor_ids[j]
    and angle equal to its initial shortest-path direction.
    """

    center_id: int
    neighbor_ids: np.ndarray
    coords: np.ndarray
    distances: np.ndarray


class ReferenceSurface:
    """An edge-manifold triangle mesh with a geodesic query structure."""

    def __init__(self, mesh: TriangleMesh):
        self.mesh = mesh
        self.positions = mesh.positions
        adjacency = build_edge_adjacency(mesh)
        for edge, tris in adjacency.incidence.items():
            if len(tris) > 2:
                raise DegenerateGeometryError(f"non-manifold edge {edge}")
        self._edge_tris = adjacency.incidence
        self._vert_tris: list[list[int]] = [[] for _ in range(len(mesh.positions))]
        for ti, t in enumerate(mesh.triangles):
            for v in t:
                self._vert_tris[int(v)].append(ti)
        self._adj = self._build_graph()
        self._ring_cache: dict[int, tuple[list[int], np.ndarray, float]] = {}

    # graph construction -------------------------------------------------

    def _build_graph(self):
        pos = self.positions
        n = len(pos)
        adj: list[list[tuple[int, float, tuple]] ] = [[] for _ in range(n)]
        for (u, v), tris in self._edge_tris.items():
            w = float(np.linalg.norm(pos[u] - pos[v]))
            adj[u].append((v, w, ("ring", v)))
            adj[v].append((u, w, ("ring", u)))
            if len(tris) == 2:
                w1 = self._opposite_vertex(tris[0], u, v)
                w2 = self._opposite_vertex(tris[1], u, v)
                diag = _unfolded_diagonal(pos[u], pos[v], pos[w1], pos[w2])
                if diag is not None:
                    adj[w1].append((w2, diag, ("diag", u, v)))
                    adj[w2].append((w1, diag, ("diag", u, v)))
        return adj

    def _opposite_vertex(self, tri_index: int, u: int, v: int) -> int:
        t = self.mesh.triangles[tri_index]
        for vert in t:
            if vert != u and vert != v:
                return int(vert)
        raise AssertionError("degenerate triangle in edge map")

    # ring geometry -------------------------------------------------------

    def one_ring(self, center: int) -> tuple[list[int], np.ndarray, float]:
        """Cyclically ordered ring neighbors, their scaled angles, and the scale.

        Ordering follows the stored triangle orientation. Returns
        (neighbors, angle_of_edge_to_neighbor, scale) where scale maps raw
        wedge angles to the normalized chart (total angle 2 pi for interior
        vertices; open fans are scaled the same way).
        """
        if center in self._ring_cache:
            return self._ring_cache[center]
        succ: dict[int, int] = {}
        ring_verts = set()
        for ti in self._vert_tris[center]:
            a, b, c = (int(x) for x in self.mesh.triangles[ti])
            if a == center:
                succ[b] = c
            elif b == center:
                succ[c] = a
            else:
                succ[a] = b
            ring_verts.update(x for x in (a, b, c) if x != center)
        if not succ:
            raise GeodesicError(f"vertex {center} has no incident triangles")
        starts = ring_verts - set(succ.values())
        start = min(starts) if starts else min(ring_verts)
        order = [start]
        while order[-1] in succ:
            nxt = succ[order[-1]]
            if nxt == start:
                break
            order.append(nxt)
        pos = self.positions
        wedges = []
        for i in range(len(order) - 1 + (0 if starts else 1)):
            u = order[i]
            v = order[(i + 1) % len(order)]
            e1 = pos[u] - pos[center]
            e2 = pos[v] - pos[center]
            wedges.append(_angle_between(e1, e2))
        total = float(np.sum(wedges)) if wedges else 0.0
        if total <= 0.0:
            raise GeodesicError(f"degenerate one-ring at vertex {center}")
        scale = 2.0 * np.pi / total
        cumulative = np.concatenate([[0.0], np.cumsum(wedges)])[: len(order)]
        # anchor the chart: the first ring edge sits at the angle of its
        # projection into the deterministic tangent frame of the vertex
        # normal, so flat regions chart to their true planar offsets
        normal = self._vertex_normal(center)
        t1, t2 = tangent_basis(normal)
        e0 = pos[order[0]] - pos[center]
        anchor = float(np.arctan2(e0 @ t2, e0 @ t1))
        angles = anchor + cumulative * scale
        result = (order, angles, scale)
        self._ring_cache[center] = result
        return result

    def _vertex_normal(self, center: int) -> np.ndarray:
        pos = self.positions
        total = np.zeros(3)
        for ti in self._vert_tris[center]:
            a, b, c = self.mesh.triangles[ti]
            total += np.cross(pos[b] - pos[a], pos[c] - pos[a])
        nrm = float(np.linalg.norm(total))
        if nrm == 0.0:
            raise GeodesicError(f"undefined normal at vertex {center}")
        return total / nrm

    def _first_edge_angle(self, center: int, tag: tuple) -> float:
        order, angles, scale = self.one_ring(center)
        index = {v: i for i, v in enumerate(order)}
        if tag[0] == "ring":
            return float(angles[index[tag[1]]])
        _, u, v = tag
        # the diagonal leaves center through the wedge spanned by ring
        # neighbors u, v; recover its in-wedge direction by unfolding
        if u not in index or v not in index:
            raise GeodesicError("diagonal wedge not in one-ring")
        iu, iv = index[u], index[v]
        if (iu + 1) % len(order) == iv:
            first, second = u, v
        elif (iv + 1) % len(order) == iu:
            first, second = v, u
        else:
            raise GeodesicError("diagonal wedge vertices not adjacent in ring")
        pos = self.positions
        # find the far vertex across edge (u, v) from center's triangle
        key = (u, v) if u < v else (v, u)
        tris = self._edge_tris[key]
        far = None
        for ti in tris:
            t = self.mesh.triangles[ti]
            if center not in t:
                far = self._opposite_vertex(ti, u, v)
        if far is None:
            raise GeodesicError("diagonal without opposite triangle")
        beta = _unfolded_direction(
            pos[center], pos[first], pos[second], pos[far]
        )
        base = float(self.one_ring(center)[1][index[first]])
        return base + beta * scale

    # queries -------------------------------------------------------------

    def dijkstra(self, source: int, cutoff: float = np.inf, stop_after: int | None = None):
        """Distances and first-hop tags from `source` over the augmented graph.

        Returns (dist, first_tag) dicts covering vertices within `cutoff`;
        stops early once `stop_after` vertices are settled.
        """
        dist: dict[int, float] = {source: 0.0}
        first: dict[int, tuple | None] = {source: None}
        settled: set[int] = set()
        heap: list[tuple[float, int]] = [(0.0, source)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in settled or d > cutoff:
                if d > cutoff:
                    break
                continue
            settled.add(u)
            if stop_after is not None and len(settled) >= stop_after:
                break
            for v, w, tag in self._adj[u]:
                nd = d + w
                if nd <= cutoff and nd < dist.get(v, np.inf):
                    dist[v] = nd
                    first[v] = tag if u == source else first[u]
                    heapq.heappush(heap, (nd, v))
        return {v: dist[v] for v in settled}, first


def _angle_between(e1, e2) -> float:
    n1, n2 = np.linalg.norm(e1), np.linalg.norm(e2)
    if n1 == 0.0 or n2 == 0.0:
        raise GeodesicError("zero-length edge at ring")
    cosv = np.clip(float(e1 @ e2) / (n1 * n2), -1.0, 1.0)
    return float(np.arccos(cosv))


def _planar_layout(u, v, w1):
    """Place triangle (u, v, w1) in 2D: u at origin, v on +x, w1 above."""
    L = float(np.linalg.norm(v - u))
    d1 = float(np.linalg.norm(w1 - u))
    d2 = float(np.linalg.norm(w1 - v))
    x = (d1 * d1 - d2 * d2 + L * L) / (2.0 * L)
    y2 = d1 * d1 - x * x
    y = float(np.sqrt(max(y2, 0.0)))
    return L, np.array([x, y])


def _unfolded_diagonal(pu, pv, pw1, pw2):
    """Length of the straight unfolded path w1->w2 across edge (u, v).

    None when the unfolded segment misses the shared edge; the in-surface
    shortest path then goes around an endpoint and is already represented
    by ring edges.
    """
    L, a = _planar_layout(pu, pv, pw1)
    _, b_up = _planar_layout(pu, pv, pw2)
    b = np.array([b_up[0], -b_up[1]])
    ya, yb = a[1], -b_up[1]
    denom = a[1] + b_up[1]
    if denom <= 0.0:
        return None
    x_cross = a[0] + (b[0] - a[0]) * (a[1] / denom)
    if not (0.0 < x_cross < L):
        return None
    return float(np.linalg.norm(a - b))


def _unfolded_direction(pc, pu, pv, pfar) -> float:
    """Raw angle at center between edge (c->u) and the unfolded diagonal c->far.

    Unfolds triangle (c, u, v) with c at origin and u on +x, then reflects
    the far vertex across edge (u, v) into the same plane.
    """
    # lay out c, u, v
    ru = float(np.linalg.norm(pu - pc))
    rv = float(np.linalg.norm(pv - pc))
    duv = float(np.linalg.norm(pv - pu))
    c2 = np.array([0.0, 0.0])
    u2 = np.array([ru, 0.0])
    xv = (ru * ru + rv * rv - duv * duv) / (2.0 * ru)
    yv = float(np.sqrt(max(rv * rv - xv * xv, 0.0)))
    v2 = np.array([xv, yv])
    # lay out far across (u, v), on the opposite side from c
    dfu = float(np.linalg.norm(pfar - pu))
    dfv = float(np.linalg.norm(pfar - pv))
    e = v2 - u2
    elen = float(np.linalg.norm(e))
    x = (dfu * dfu - dfv * dfv + elen * elen) / (2.0 * elen)
    y = float(np.sqrt(max(dfu * dfu - x * x, 0.0)))
    ex = e / elen
    ey = np.array([-ex[1], ex[0]])
    # c is on the +ey side of edge (u, v) iff (c2-u2) . ey > 0
    side = float((c2 - u2) @ ey)
    far2 = u2 + x * ex + (-np.sign(side) if side != 0 else 1.0) * y * ey
    beta = float(np.arctan2(far2[1], far2[0]))
    # crossing guarantees beta within the wedge; clamp float noise at 0
    return max(beta, 0.0)


def graph_geodesic_distances(
    surface: ReferenceSurface, source: int, cutoff: float = np.inf
) -> dict[int, float]:
    """Geodesic-approximating graph distances from `source`, clipped to cutoff."""
    if source < 0 or source >= len(surface.positions):
        raise IndexError("source out of range")
    dist, _ = surface.dijkstra(source, cutoff=cutoff)
    return dist


def gt_logmap(surface: ReferenceSurface, center: int, k: int) -> GroundTruthLogMap:
    """Discrete log map of the k geodesically nearest vertices around `center`."""
    dist, first = surface.dijkstra(center, stop_after=k + 1)
    reached = [(d, v) for v, d in dist.items() if v != center]
    if len(reached) < k:
        raise GeodesicError(f"only {len(reached)} reachable vertices, need {k}")
    reached.sort()
    picked = reached[:k]
    ids = np.array([v for _, v in picked], dtype=np.int64)
    radii = np.array([d for d, _ in picked])
    coords = np.empty((k, 2))
    for j, (d, v) in enumerate(picked):
        theta = surface._first_edge_angle(center, first[v])
        coords[j] = (d * np.cos(theta), d * np.sin(theta))
    return GroundTruthLogMap(
        center_id=int(center), neighbor_ids=ids, coords=coords, distances=radii
    )


def logmap_for_members(
    surface: ReferenceSurface, center: int, member_ids
) -> tuple[np.ndarray, np.ndarray]:
    """Log map coordinates and distances for a prescribed member set."""
    member_ids = np.asarray(member_ids, dtype=np.int64)
    targets = set(int(v) for v in member_ids)
    dist, first = surface.dijkstra(center)
    missing = targets - set(dist)
    if missing:
        raise GeodesicError(f"vertices unreachable from {center}: {sorted(missing)[:5]}")
    coords = np.empty((len(member_ids), 2))
    radii = np.empty(len(member_ids))
    for j, v in enumerate(member_ids):
        d = dist[int(v)]
        theta = surface._first_edge_angle(center, first[int(v)])
        coords[j] = (d * np.cos(theta), d * np.sin(theta))
        radii[j] = d
    return coords, radii


def analytic_logmap(shape: str, params: dict, center, neighbor) -> np.ndarray:
    """Closed-form log maps on canonical surfaces, used as test oracles.

    shape 'plane': the z = params['z'] plane, chart axes x, y.
    shape 'sphere': radius params['radius'] centered at params.get('origin');
        chart axes from the deterministic tangent frame at `center`.
    shape 'cylinder': axis +z through origin, radius params['radius'];
        chart = (circumferential arc, axial offset).
    """
    c = np.asarray(center, dtype=np.float64)
    p = np.asarray(neighbor, dtype=np.float64)
    if shape == "plane":
        z = float(params.get("z", 0.0))
        if abs(c[2] - z) > 1e-9 or abs(p[2] - z) > 1e-9:
            raise ValueError("points not on the plane")
        return np.array([p[0] - c[0], p[1] - c[1]])
    if shape == "sphere":
        r = float(params["radius"])
        o = np.asarray(params.get("origin", (0.0, 0.0, 0.0)), dtype=np.float64)
        cu, pu = c - o, p - o
        if abs(np.linalg.norm(cu) - r) > 1e-9 or abs(np.linalg.norm(pu) - r) > 1e-9:
            raise ValueError("points not on the sphere")
        cn, pn = cu / r, pu / r
        cosang = np.clip(float(cn @ pn), -1.0, 1.0)
        ang = float(np.arccos(cosang))
        d = r * ang
        t = pn - cosang * cn
        tn = float(np.linalg.norm(t))
        from .geometry import tangent_basis

        t1, t2 = tangent_basis(cn)
        if tn < 1e-15:
            return np.array([d, 0.0])
        t /= tn
        return d * np.array([float(t @ t1), float(t @ t2)])
    if shape == "cylinder":
        r = float(params["radius"])
        for q in (c, p):
            if abs(np.hypot(q[0], q[1]) - r) > 1e-9:
                raise ValueError("points not on the cylinder")
        a0 = np.arctan2(c[1], c[0])
        a1 = np.arctan2(p[1], p[0])
        dphi = (a1 - a0 + np.pi) % (2.0 * np.pi) - np.pi
        return np.array([r * dphi, p[2] - c[2]])
    raise ValueError(f"unknown shape {shape!r}")
