"""Fusion of surface elements into one near-manifold mesh.

Candidate triangles are binned by how many of their own vertices' elements
proposed them (3 is mutual agreement, the strongest signal), then inserted
greedily under a hard cap of two triangles per edge. The cap is what makes
every output edge manifold.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .delaunay import DelaunaySurfaceElement
from .geometry import (
    DegenerateGeometryError,
    PointCloud,
    TriangleMesh,
    estimate_normal_pca,
    mesh_from_cloud,
)


@dataclass(frozen=True)
class CandidateTable:
    """Canonical triangle -> (membership count, mean 2D min-angle quality)."""

    counts: dict[tuple[int, int, int], int]
    quality: dict[tuple[int, int, int], float]

    def __len__(self):
        return len(self.counts)


def count_memberships(dses: list[DelaunaySurfaceElement]) -> CandidateTable:
    """Tally, per canonical triangle, the distinct proposing centers.

    A triangle can only be proposed by elements centered at its own three
    vertices, so counts live in 1..3. Quality is the min Delaunay angle
    averaged over proposers.
    """
    proposers: dict[tuple[int, int, int], set[int]] = {}
    quality_sum: dict[tuple[int, int, int], float] = {}
    quality_n: dict[tuple[int, int, int], int] = {}
    for dse in dses:
        for tri, angle in zip(dse.triangles, dse.min_angles):
            seen = proposers.setdefault(tri, set())
            if dse.center_id not in seen:
                seen.add(dse.center_id)
            quality_sum[tri] = quality_sum.get(tri, 0.0) + float(angle)
            quality_n[tri] = quality_n.get(tri, 0) + 1
    counts = {tri: len(centers) for tri, centers in proposers.items()}
    quality = {tri: quality_sum[tri] / quality_n[tri] for tri in quality_sum}
    return CandidateTable(counts=counts, quality=quality)


def greedy_select(table: CandidateTable, cloud: PointCloud) -> TriangleMesh:
    """Select candidates under a hard cap of two triangles per edge.

    Priority is (membership bin 3, 2, 1; within a bin descending quality;
    ties by canonical triple). All bin-3 candidates are offered first in
    that order; the remainder is then inserted by region growth: a frontier
    queue keyed by the same priority offers candidates adjacent to the
    selected mesh before isolated ones, which keeps low-confidence
    insertions locally consistent instead of scattering mutual blockers.

    Candidates that are degenerate in 3D (collinear corners, which chart
    noise can promote to sliver candidates) are rejected outright. The
    result is consistently oriented per connected component.
    """
    import heapq

    priority = {
        tri: (-table.counts[tri], -table.quality[tri], tri)
        for tri in table.counts
        if not _degenerate_3d(tri, cloud)
    }
    order = sorted(priority, key=priority.get)
    edge_to_cands: dict[tuple[int, int], list] = {}
    for tri in order:
        for e in _edges_of(tri):
            edge_to_cands.setdefault(e, []).append(tri)

    edge_load: dict[tuple[int, int], int] = {}
    chosen: list[tuple[int, int, int]] = []
    selected: set[tuple[int, int, int]] = set()

    def admissible(tri):
        return all(edge_load.get(e, 0) < 2 for e in _edges_of(tri))

    def insert(tri):
        selected.add(tri)
        chosen.append(tri)
        for e in _edges_of(tri):
            edge_load[e] = edge_load.get(e, 0) + 1

    # mutual-agreement bin first, straight priority order
    for tri in order:
        if priority[tri][0] == -3 and admissible(tri):
            insert(tri)

    # grow the rest outward from the selected mesh
    heap: list = []
    queued: set[tuple[int, int, int]] = set()

    def push_neighbors(tri):
        for e in _edges_of(tri):
            for cand in edge_to_cands.get(e, ()):
                if cand not in selected and cand not in queued:
                    queued.add(cand)
                    heapq.heappush(heap, priority[cand])

    for tri in chosen:
        push_neighbors(tri)
    seed_iter = iter(order)
    while True:
        while heap:
            _, _, tri = heapq.heappop(heap)
            queued.discard(tri)
            if tri in selected or not admissible(tri):
                continue
            insert(tri)
            push_neighbors(tri)
        seed = None
        for tri in seed_iter:
            if tri not in selected and admissible(tri):
                seed = tri
                break
        if seed is None:
            break
        insert(seed)
        push_neighbors(seed)

    oriented = orient_consistently(chosen, cloud)
    return mesh_from_cloud(cloud, oriented)


def _degenerate_3d(tri, cloud, rel_tol: float = 1e-12) -> bool:
    a, b, c = (cloud.positions[v] for v in tri)
    u, v = b - a, c - a
    area2 = np.linalg.norm(np.cross(u, v))
    longest2 = max((u * u).sum(), (v * v).sum(), ((c - b) ** 2).sum())
    return bool(area2 <= rel_tol * longest2)


def _edges_of(tri):
    a, b, c = tri
    return ((a, b), (b, c), (a, c))


def orient_consistently(triangles: list[tuple[int, int, int]], cloud: PointCloud) -> np.ndarray:
    """Propagate a consistent winding across shared edges, per component.

    Breadth-first over the edge graph, flipping triangles so shared edges
    are traversed in opposite directions. Each component's overall flip is
    chosen by majority agreement with locally estimated point normals.
    """
    if not triangles:
        return np.empty((0, 3), dtype=np.int64)
    tris = [tuple(int(v) for v in t) for t in triangles]
    edge_to_tris: dict[tuple[int, int], list[int]] = {}
    for ti, t in enumerate(tris):
        for e in _edges_of(t):
            edge_to_tris.setdefault(e, []).append(ti)

    oriented: list[tuple[int, int, int] | None] = [None] * len(tris)
    visited = np.zeros(len(tris), dtype=bool)
    result = []
    for seed in range(len(tris)):
        if visited[seed]:
            continue
        component = []
        oriented[seed] = tris[seed]
        visited[seed] = True
        queue = deque([seed])
        while queue:
            ti = queue.popleft()
            component.append(ti)
            a, b, c = oriented[ti]  # type: ignore[misc]
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                for tj in edge_to_tris.get(key, ()):
                    if visited[tj]:
                        continue
                    visited[tj] = True
                    oriented[tj] = _match_winding(tris[tj], (u, v))
                    queue.append(tj)
        flip = _component_flip(component, oriented, cloud)
        for ti in component:
            t = oriented[ti]  # type: ignore[assignment]
            result.append((t[0], t[2], t[1]) if flip else t)
    return np.array(result, dtype=np.int64)


def _match_winding(tri, directed_edge):
    """Orient `tri` so it traverses directed_edge in the opposite direction."""
    u, v = directed_edge
    a, b, c = tri
    cycles = [(a, b, c), (b, c, a), (c, a, b)]
    for x, y, z in cycles:
        if (x, y) == (v, u):
            return (x, y, z)
        if (x, y) == (u, v):
            return (y, x, z)
    # edge spans non-adjacent order; normalize via the third vertex
    for x, y, z in cycles:
        if {x, y} == {u, v}:
            return (v, u, z)
    raise AssertionError("triangle does not contain the shared edge")


def _component_flip(component, oriented, cloud) -> bool:
    """Vote each triangle's normal against reference or PCA point normals."""
    agree = 0.0
    for ti in component:
        a, b, c = oriented[ti]
        pa, pb, pc = cloud.positions[a], cloud.positions[b], cloud.positions[c]
        n = np.cross(pb - pa, pc - pa)
        ln = np.linalg.norm(n)
        if ln == 0.0:
            continue
        n /= ln
        if cloud.normals is not None:
            ref = cloud.normals[[a, b, c]].sum(axis=0)
            rl = np.linalg.norm(ref)
            if rl == 0.0:
                continue
            ref = ref / rl
        else:
            try:
                ref = estimate_normal_pca(np.vstack([pa, pb, pc]))
            except DegenerateGeometryError:
                continue
        agree += float(np.sign(n @ ref))
    return agree < 0.0


def dedup_union(dses: list[DelaunaySurfaceElement], cloud: PointCloud) -> TriangleMesh:
    """All proposed triangles, deduplicated, with no manifold filtering."""
    seen = sorted({tri for dse in dses for tri in dse.triangles})
    oriented = orient_consistently(list(seen), cloud)
    return mesh_from_cloud(cloud, oriented)
