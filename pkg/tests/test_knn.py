import numpy as np
import pytest

from dsemesh.geometry import PointCloud
from dsemesh.knn import KnnIndex, knn


def brute_force(points, query, K):
    d = np.linalg.norm(points - points[query], axis=1)
    ids = np.arange(len(points))
    keep = ids != query
    ids, d = ids[keep], d[keep]
    order = np.lexsort((ids, d))
    return ids[order][:K], d[order][:K]


class TestKnn:
    def test_axis_line(self):
        cloud = PointCloud(positions=np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]], float))
        pairs = knn(KnnIndex(cloud), 0, 2)
        assert [p[0] for p in pairs] == [1, 2]
        assert [p[1] for p in pairs] == [1.0, 2.0]

    def test_equals_brute_force_on_random_clouds(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            n = int(rng.integers(50, 400))
            cloud = PointCloud(positions=rng.random((n, 3)))
            index = KnnIndex(cloud)
            for K in (1, 30, min(120, n - 1)):
                q = int(rng.integers(n))
                ids, d = index.knn(q, K)
                bids, bd = brute_force(cloud.positions, q, K)
                assert np.array_equal(ids, bids)
                assert np.array_equal(d, bd)

    def test_k_equals_n_rejected(self):
        cloud = PointCloud(positions=np.random.default_rng(1).random((10, 3)))
        with pytest.raises(ValueError):
            KnnIndex(cloud).knn(0, 10)

    def test_distances_non_decreasing(self):
        rng = np.random.default_rng(2)
        cloud = PointCloud(positions=rng.random((200, 3)))
        _, d = KnnIndex(cloud).knn(5, 50)
        assert np.all(np.diff(d) >= 0)

    def test_grid_tie_breaking_by_id(self):
        # 4 equidistant neighbors around the origin: ids decide the order
        pts = np.array(
            [[0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [5, 5, 5]], float
        )
        ids, d = KnnIndex(PointCloud(positions=pts)).knn(0, 3)
        assert list(ids) == [1, 2, 3]

    def test_bulk_matches_per_point(self):
        rng = np.random.default_rng(3)
        cloud = PointCloud(positions=rng.random((150, 3)))
        index = KnnIndex(cloud)
        all_ids, all_d = index.knn_all(20)
        for q in range(0, 150, 17):
            ids, d = index.knn(q, 20)
            assert np.array_equal(all_ids[q], ids)
            assert np.array_equal(all_d[q], d)

    def test_bulk_on_grid_with_ties(self):
        xs, ys = np.meshgrid(np.arange(8), np.arange(8))
        pts = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(64)]).astype(float)
        cloud = PointCloud(positions=pts)
        index = KnnIndex(cloud)
        all_ids, _ = index.knn_all(6)
        for q in range(64):
            bids, _ = brute_force(pts, q, 6)
            assert np.array_equal(all_ids[q], bids)
