import numpy as np
import pytest

from dsemesh.cli import main
from dsemesh.geometry import PointCloud
from dsemesh.meshio import read_mesh, write_point_cloud
from dsemesh.shapes import _triangular_lattice


@pytest.fixture()
def plane_xyz(tmp_path):
    cloud = PointCloud(positions=_triangular_lattice(12, 12, 1.0))
    path = tmp_path / "plane.xyz"
    write_point_cloud(path, cloud)
    return path


class TestReconstructCommand:
    def test_smoke(self, plane_xyz, tmp_path):
        out = tmp_path / "mesh.obj"
        code = main([
            "reconstruct", str(plane_xyz), str(out),
            "--K", "30", "--k", "12", "--estimator", "projection",
        ])
        assert code == 0
        mesh = read_mesh(out)
        assert mesh.n_triangles > 150

    def test_missing_input_is_runtime_error(self, tmp_path):
        code = main(["reconstruct", str(tmp_path / "nope.xyz"), str(tmp_path / "o.obj")])
        assert code == 2

    def test_unknown_flag_is_usage_error(self, plane_xyz, tmp_path):
        code = main([
            "reconstruct", str(plane_xyz), str(tmp_path / "o.obj"), "--frobnicate",
        ])
        assert code == 1

    def test_report_files_written(self, plane_xyz, tmp_path):
        out = tmp_path / "mesh.obj"
        report = tmp_path / "report.txt"
        code = main([
            "reconstruct", str(plane_xyz), str(out),
            "--K", "30", "--k", "12", "--report", str(report),
        ])
        assert code == 0
        assert report.exists()
        assert report.with_suffix(".txt.json").exists()
        assert report.with_suffix(".txt.angles.png").exists()
        text = report.read_text()
        assert "config.K = 30" in text
        assert "nw_percent" in text


class TestMakeShapeAndEval:
    def test_make_icosphere_then_eval(self, tmp_path):
        sphere = tmp_path / "sphere.obj"
        assert main(["make-shape", "icosphere", str(sphere), "--level", "2"]) == 0
        mesh_out = tmp_path / "recon.obj"
        cloud = tmp_path / "cloud.xyz"
        # make a cloud from the sphere vertices
        mesh = read_mesh(sphere)
        write_point_cloud(cloud, PointCloud(positions=mesh.positions))
        assert main([
            "reconstruct", str(cloud), str(mesh_out),
            "--K", "40", "--k", "12", "--estimator", "rotation",
        ]) == 0
        code = main(["eval", str(mesh_out), str(sphere), "--samples", "4000"])
        assert code == 0

    def test_eval_report(self, tmp_path):
        sphere = tmp_path / "s.obj"
        main(["make-shape", "icosphere", str(sphere), "--level", "2"])
        report = tmp_path / "rep"
        code = main(["eval", str(sphere), str(sphere), "--samples", "2000",
                     "--report", str(report)])
        assert code == 0
        assert report.exists()


class TestGenDataCommand:
    def test_writes_dataset(self, tmp_path):
        sphere = tmp_path / "s.obj"
        main(["make-shape", "icosphere", str(sphere), "--level", "2"])
        out = tmp_path / "patches.dsepatch"
        code = main([
            "gen-data", str(sphere), str(out),
            "--K", "40", "--k", "12", "--per-shape-patches", "25",
        ])
        assert code == 0
        from dsemesh.formats import read_patch_dataset

        ds = read_patch_dataset(out)
        assert len(ds) == 25
        assert ds.K == 40 and ds.k == 12


class TestSweepCommand:
    def test_tsv_and_figure(self, plane_xyz, tmp_path):
        out = tmp_path / "sweep"
        code = main([
            "sweep", str(plane_xyz),
            "--grid", "k=8,12", "K=25,30",
            "--out", str(out),
        ])
        assert code == 0
        tsv = out.with_suffix(".tsv")
        assert tsv.exists()
        lines = tsv.read_text().strip().splitlines()
        assert len(lines) == 5  # header + 4 rows
        assert out.with_suffix(".png").exists()

    def test_bad_grid_axis(self, plane_xyz):
        code = main(["sweep", str(plane_xyz), "--grid", "q=1,2"])
        assert code == 2
