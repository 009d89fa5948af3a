"""Selection of geodesic patches from Euclidean candidate neighborhoods.

The heuristic mode approximates surface distance with shortest paths over a
small symmetric g-NN graph inside the candidate set, which separates nearby
sheets without any learned model. The neural mode ranks candidates by a
trained classifier score.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .geometry import PointCloud
from .knn import KnnIndex


@dataclass(frozen=True)
class CandidatePatch:
    """A center and its K Euclidean nearest neighbors, sorted by distance."""

    center_id: int
    candidate_ids: np.ndarray
    distances: np.ndarray
    rel_positions: np.ndarray  # candidate position minus center position

    @property
    def K(self) -> int:
        return len(self.candidate_ids)


@dataclass(frozen=True)
class GeodesicPatch:
    """The k members of a candidate patch judged geodesically closest."""

    center_id: int
    member_ids: np.ndarray
    distances: np.ndarray
    rel_positions: np.ndarray
    scores: np.ndarray | None = None  # classifier scores in neural mode
    fallback: bool = False  # heuristic fell back to Euclidean top-k

    @property
    def k(self) -> int:
        return len(self.member_ids)


def build_candidates(cloud: PointCloud, center: int, K: int, index: KnnIndex | None = None) -> CandidatePatch:
    """K nearest neighbors of `center`, center excluded."""
    if index is None:
        index = KnnIndex(cloud)
    ids, dists = index.knn(center, K)
    rel = cloud.positions[ids] - cloud.positions[center]
    return CandidatePatch(center_id=int(center), candidate_ids=ids, distances=dists, rel_positions=rel)


def candidates_from_rows(center: int, ids, dists, rel) -> CandidatePatch:
    return CandidatePatch(
        center_id=int(center),
        candidate_ids=np.asarray(ids, dtype=np.int64),
        distances=np.asarray(dists, dtype=np.float64),
        rel_positions=np.asarray(rel, dtype=np.float64),
    )


def select_geodesic_heuristic(patch: CandidatePatch, k: int, g: int = 8) -> GeodesicPatch:
    """Pick the k candidates closest to the center along a local g-NN graph.

    The graph spans the center plus all candidates, symmetrized, with
    Euclidean edge weights. Ties break by Euclidean distance then id. When
    fewer than k candidates are reachable, falls back to Euclidean top-k
    and flags the patch.
    """
    K = patch.K
    if not (0 < k <= K):
        raise ValueError(f"k={k} out of range (0, {K}]")
    pts = np.vstack([np.zeros(3), patch.rel_positions])  # row 0 = center
    n = len(pts)
    g_eff = min(g, n - 1)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    nearest = np.argpartition(dist, g_eff - 1, axis=1)[:, :g_eff]
    adj: list[dict[int, float]] = [dict() for _ in range(n)]
    for i in range(n):
        for j in nearest[i]:
            w = float(dist[i, j])
            adj[i][int(j)] = w
            adj[int(j)][i] = w

    graph_dist = np.full(n, np.inf)
    graph_dist[0] = 0.0
    heap = [(0.0, 0)]
    done = np.zeros(n, dtype=bool)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, w in adj[u].items():
            nd = d + w
            if nd < graph_dist[v]:
                graph_dist[v] = nd
                heapq.heappush(heap, (nd, v))

    cand_graph = graph_dist[1:]
    reachable = np.isfinite(cand_graph)
    fallback = reachable.sum() < k
    if fallback:
        order = np.lexsort((patch.candidate_ids, patch.distances))
    else:
        order = np.lexsort((patch.candidate_ids, patch.distances, cand_graph))
    pick = order[:k]
    pick = pick[np.lexsort((patch.candidate_ids[pick], patch.distances[pick]))]
    return GeodesicPatch(
        center_id=patch.center_id,
        member_ids=patch.candidate_ids[pick],
        distances=patch.distances[pick],
        rel_positions=patch.rel_positions[pick],
        fallback=bool(fallback),
    )


def select_geodesic_neural(patch: CandidatePatch, weights, k: int) -> GeodesicPatch:
    """Pick the top-k candidates by classifier score (ties: distance, then id)."""
    from .network import featurize, forward_classifier

    if not (0 < k <= patch.K):
        raise ValueError(f"k={k} out of range (0, {patch.K}]")
    feats = featurize(patch)
    scores = forward_classifier(feats, weights)[1:]  # drop the center row
    order = np.lexsort((patch.candidate_ids, patch.distances, -scores))
    pick = order[:k]
    pick = pick[np.lexsort((patch.candidate_ids[pick], patch.distances[pick]))]
    return GeodesicPatch(
        center_id=patch.center_id,
        member_ids=patch.candidate_ids[pick],
        distances=patch.distances[pick],
        rel_positions=patch.rel_positions[pick],
        scores=scores[pick],
    )
