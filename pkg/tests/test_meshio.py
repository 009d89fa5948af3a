import numpy as np
import pytest

from dsemesh.geometry import PointCloud, TriangleMesh
from dsemesh.meshio import (
    FileFormatError,
    read_mesh,
    read_point_cloud,
    write_mesh,
    write_point_cloud,
)


def make_mesh(positions, triangles):
    positions = np.asarray(positions, dtype=float)
    return TriangleMesh(
        vertex_ids=np.arange(len(positions)),
        positions=positions,
        triangles=np.asarray(triangles),
    )


class TestXyz:
    def test_basic(self, tmp_path):
        path = tmp_path / "pts.xyz"
        path.write_text("0 0 0\n1 0 0\n")
        cloud = read_point_cloud(path)
        assert len(cloud) == 2
        assert cloud.normals is None

    def test_with_normals(self, tmp_path):
        path = tmp_path / "pts.xyz"
        path.write_text("0 0 0 0 0 1\n1 0 0 0 1 0\n")
        cloud = read_point_cloud(path)
        assert cloud.normals is not None
        assert np.allclose(cloud.normals[0], [0, 0, 1])

    def test_short_line_reports_position(self, tmp_path):
        path = tmp_path / "pts.xyz"
        path.write_text("0 0\n")
        with pytest.raises(FileFormatError, match="1"):
            read_point_cloud(path)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        nrm = rng.normal(size=(20, 3))
        nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
        cloud = PointCloud(positions=rng.random((20, 3)), normals=nrm)
        path = tmp_path / "out.xyz"
        write_point_cloud(path, cloud)
        back = read_point_cloud(path)
        assert np.allclose(back.positions, cloud.positions)
        assert np.allclose(back.normals, cloud.normals)


class TestObj:
    def test_write_single_triangle(self, tmp_path):
        mesh = make_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
        path = tmp_path / "tri.obj"
        write_mesh(path, mesh)
        text = path.read_text()
        assert text.count("v ") == 3
        assert "f 1 2 3" in text

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        mesh = make_mesh(rng.random((9, 3)), [[0, 1, 2], [3, 4, 5], [6, 7, 8]])
        path = tmp_path / "m.obj"
        write_mesh(path, mesh)
        back = read_mesh(path)
        assert np.allclose(back.positions, mesh.positions)
        assert np.array_equal(back.triangles, mesh.triangles)

    def test_mark_nonmanifold_groups(self, tmp_path):
        mesh = make_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
        path = tmp_path / "open.obj"
        write_mesh(path, mesh, mark_nonmanifold=True)
        assert "usemtl nonmanifold" in path.read_text()
        assert (tmp_path / "open.mtl").exists()

    def test_slash_faces_parsed(self, tmp_path):
        path = tmp_path / "m.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2 3/3\n")
        mesh = read_mesh(path)
        assert mesh.n_triangles == 1


class TestPly:
    def test_ascii_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        mesh = make_mesh(rng.random((6, 3)), [[0, 1, 2], [3, 4, 5]])
        path = tmp_path / "m.ply"
        write_mesh(path, mesh)
        back = read_mesh(path)
        assert np.allclose(back.positions, mesh.positions)
        assert np.array_equal(back.triangles, mesh.triangles)

    def test_ascii_marked_faces_carry_color(self, tmp_path):
        mesh = make_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
        path = tmp_path / "m.ply"
        write_mesh(path, mesh, mark_nonmanifold=True)
        assert "255 0 0" in path.read_text()

    def test_binary_little_endian_vertices(self, tmp_path):
        import struct

        path = tmp_path / "b.ply"
        header = (
            b"ply\nformat binary_little_endian 1.0\n"
            b"element vertex 2\n"
            b"property float x\nproperty float y\nproperty float z\n"
            b"property float nx\nproperty float ny\nproperty float nz\n"
            b"end_header\n"
        )
        body = struct.pack("<6f", 0, 0, 0, 0, 0, 1) + struct.pack("<6f", 1, 2, 3, 0, 1, 0)
        path.write_bytes(header + body)
        cloud = read_point_cloud(path)
        assert np.allclose(cloud.positions[1], [1, 2, 3])
        assert np.allclose(cloud.normals[0], [0, 0, 1])

    def test_not_a_ply_rejected(self, tmp_path):
        path = tmp_path / "bad.ply"
        path.write_text("hello\n")
        with pytest.raises(FileFormatError):
            read_point_cloud(path)
