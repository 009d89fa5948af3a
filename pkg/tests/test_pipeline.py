import numpy as np
import pytest

from dsemesh.geometry import DegenerateGeometryError, PointCloud
from dsemesh.pipeline import PipelineConfig, reconstruct, sweep
from dsemesh.shapes import _triangular_lattice, fibonacci_sphere_cloud


def small_plane(side=14):
    return PointCloud(positions=_triangular_lattice(side, side, 1.0))


class TestConfig:
    def test_k_bounds_enforced(self):
        with pytest.raises(ValueError):
            PipelineConfig(K=10, k=11)
        with pytest.raises(ValueError):
            PipelineConfig(k=2)

    def test_unknown_modes_rejected(self):
        with pytest.raises(ValueError):
            PipelineConfig(estimator="fourier")
        with pytest.raises(ValueError):
            PipelineConfig(neighborhood="psychic")


class TestReconstruct:
    def test_small_plane_reconstruction(self):
        cloud = small_plane()
        mesh, report, diag = reconstruct(cloud, PipelineConfig(K=40, k=14))
        assert mesh.n_triangles > 250
        assert report.nw_percent < 8.0
        assert set(mesh.vertex_ids.tolist()) <= set(cloud.ids.tolist())

    def test_degenerate_cloud_rejected(self):
        line = PointCloud(positions=np.outer(np.arange(10), [1.0, 2.0, 3.0]))
        with pytest.raises(DegenerateGeometryError):
            reconstruct(line, PipelineConfig(K=5, k=3))

    def test_K_shrinks_with_warning(self):
        cloud = small_plane(6)  # 36 points < default K
        with pytest.warns(UserWarning):
            mesh, report, diag = reconstruct(cloud, PipelineConfig(K=120, k=10))
        assert diag.k_shrunk_to == 35

    def test_neural_mode_needs_weights(self):
        cloud = small_plane()
        with pytest.raises(ValueError):
            reconstruct(cloud, PipelineConfig(K=40, k=14, estimator="neural"))
        with pytest.raises(ValueError):
            reconstruct(cloud, PipelineConfig(K=40, k=14, neighborhood="neural"))

    def test_deterministic_across_runs(self):
        cloud = fibonacci_sphere_cloud(300)
        cfg = PipelineConfig(K=40, k=14, estimator="rotation")
        mesh1, _, _ = reconstruct(cloud, cfg)
        mesh2, _, _ = reconstruct(cloud, cfg)
        assert np.array_equal(mesh1.triangles, mesh2.triangles)
        assert np.array_equal(mesh1.vertex_ids, mesh2.vertex_ids)

    def test_workers_agree_with_serial(self):
        cloud = small_plane(10)
        a, _, _ = reconstruct(cloud, PipelineConfig(K=30, k=12))
        b, _, _ = reconstruct(cloud, PipelineConfig(K=30, k=12, workers=2))
        assert np.array_equal(a.triangles, b.triangles)

    def test_no_select_emits_union(self):
        cloud = small_plane(10)
        full, _, _ = reconstruct(cloud, PipelineConfig(K=30, k=12))
        union, _, _ = reconstruct(cloud, PipelineConfig(K=30, k=12, select=False))
        assert union.n_triangles >= full.n_triangles

    def test_edge_cap_guarantee(self):
        from dsemesh.geometry import build_edge_adjacency

        rng = np.random.default_rng(17)
        cloud = PointCloud(positions=rng.random((250, 3)))
        mesh, _, _ = reconstruct(cloud, PipelineConfig(K=40, k=12))
        adjacency = build_edge_adjacency(mesh)
        assert max(len(t) for t in adjacency.incidence.values()) <= 2

    def test_diagnostics_have_stage_timings(self):
        cloud = small_plane(8)
        _, _, diag = reconstruct(cloud, PipelineConfig(K=25, k=10))
        for stage in ("knn", "neighborhoods", "logmap_estimation",
                      "logmap_alignment", "triangulation", "selection"):
            assert stage in diag.timings


class TestSweep:
    def test_grid_of_configs(self):
        cloud = small_plane(10)
        configs = [
            PipelineConfig(K=K, k=k)
            for k in (8, 12)
            for K in (25, 35)
        ]
        rows = sweep(cloud, configs)
        assert len(rows) == 4
        assert all("nw_percent" in r for r in rows)

    def test_empty_config_list(self):
        assert sweep(small_plane(8), []) == []

    def test_failing_config_recorded(self):
        cloud = small_plane(10)
        configs = [
            PipelineConfig(K=25, k=8),
            PipelineConfig(K=25, k=8, estimator="neural"),  # no weights: fails
            PipelineConfig(K=25, k=10),
        ]
        rows = sweep(cloud, configs)
        assert len(rows) == 3
        assert "error" in rows[1]
        assert "nw_percent" in rows[0] and "nw_percent" in rows[2]
