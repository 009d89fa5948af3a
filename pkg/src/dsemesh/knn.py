"""Exact k-nearest-neighbor queries over the input cloud.

Backed by scipy's cKDTree; ties in distance are re-broken by ascending
point id so results match a brute-force scan ordered by (distance, id).
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .geometry import PointCloud


class KnnIndex:
    """Immutable spatial index over a point cloud; queries are read-only."""

    def __init__(self, cloud: PointCloud):
        self.cloud = cloud
        self._tree = cKDTree(cloud.positions)

    def __len__(self):
        return len(self.cloud)

    def knn(self, query: int, K: int) -> tuple[np.ndarray, np.ndarray]:
        """Ids and distances of the K nearest points to point `query`, self excluded.

        Sorted by ascending distance, ties by ascending id.
        """
        n = len(self.cloud)
        if K > n - 1:
            raise ValueError(f"K={K} exceeds N-1={n - 1}")
        if query < 0 or query >= n:
            raise IndexError("query id out of range")
        if K == 0:
            return np.empty(0, dtype=np.int64), np.empty(0)
        pos = self.cloud.positions[query]
        k_query = min(K + 1, n)
        dists, idx = self._tree.query(pos, k=k_query)
        dists, idx = np.atleast_1d(dists), np.atleast_1d(idx)
        # widen by the radius of the last hit so distance ties straddling the
        # cut are all present before re-sorting by (distance, id)
        r = dists[-1]
        cand = np.array(self._tree.query_ball_point(pos, r * (1.0 + 1e-12)), dtype=np.int64)
        if len(cand) < len(idx):
            cand = np.asarray(idx, dtype=np.int64)
        cand = cand[cand != query]
        d = np.linalg.norm(self.cloud.positions[cand] - pos, axis=1)
        order = np.lexsort((cand, d))
        cand, d = cand[order], d[order]
        return cand[:K], d[:K]

    def knn_all(self, K: int) -> tuple[np.ndarray, np.ndarray]:
        """Bulk (N, K) neighbor ids and distances for every point, self excluded."""
        n = len(self.cloud)
        if K > n - 1:
            raise ValueError(f"K={K} exceeds N-1={n - 1}")
        k_query = min(K + 2, n)
        dists, idx = self._tree.query(self.cloud.positions, k=k_query)
        out_ids = np.empty((n, K), dtype=np.int64)
        out_d = np.empty((n, K))
        for i in range(n):
            keep = idx[i] != i
            row_ids, row_d = idx[i][keep], dists[i][keep]
            # a distance tie across the K-cut means the kept set is not
            # uniquely determined; re-resolve with the per-point query
            tie_at_cut = len(row_d) > K and row_d[K - 1] == row_d[K]
            if len(row_ids) < K or tie_at_cut:
                row_ids, row_d = self.knn(i, K)
            else:
                row_ids, row_d = row_ids[:K], row_d[:K]
                order = np.lexsort((row_ids, row_d))
                row_ids, row_d = row_ids[order], row_d[order]
            out_ids[i] = row_ids
            out_d[i] = row_d
        return out_ids, out_d


def knn(index: KnnIndex, query: int, K: int) -> list[tuple[int, float]]:
    """Functional wrapper: (id, distance) pairs sorted ascending."""
    ids, dists = index.knn(query, K)
    return [(int(i), float(d)) for i, d in zip(ids, dists)]
