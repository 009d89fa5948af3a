"""Point cloud and mesh file readers/writers (xyz, obj, ply ascii/binary)."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .geometry import PointCloud, TriangleMesh, build_edge_adjacency


class FileFormatError(ValueError):
    pass


def read_point_cloud(path, fmt: str | None = None) -> PointCloud:
    """Load positions (and normals when present) from xyz, ply, or obj.

    xyz lines are whitespace-separated "x y z [nx ny nz]". The format is
    inferred from the extension unless given explicitly.
    """
    path = Path(path)
    fmt = fmt or _infer_format(path)
    if fmt == "xyz":
        return _read_xyz(path)
    if fmt in ("ply", "ply-ascii", "ply-binary-le"):
        positions, normals, _ = _read_ply(path)
        return PointCloud(positions=positions, normals=normals)
    if fmt in ("obj", "obj-vertices"):
        positions, _ = _read_obj(path)
        return PointCloud(positions=positions)
    raise FileFormatError(f"unknown point cloud format {fmt!r}")


def read_mesh(path, fmt: str | None = None) -> TriangleMesh:
    """Load a triangle mesh from obj or ply."""
    path = Path(path)
    fmt = fmt or _infer_format(path)
    if fmt in ("obj", "obj-vertices"):
        positions, faces = _read_obj(path)
    elif fmt in ("ply", "ply-ascii", "ply-binary-le"):
        positions, _, faces = _read_ply(path)
    else:
        raise FileFormatError(f"unknown mesh format {fmt!r}")
    if faces is None or len(faces) == 0:
        raise FileFormatError(f"{path} contains no faces")
    return TriangleMesh(
        vertex_ids=np.arange(len(positions), dtype=np.int64),
        positions=positions,
        triangles=faces,
    )


def _infer_format(path: Path) -> str:
    ext = path.suffix.lower().lstrip(".")
    if ext in ("xyz", "txt"):
        return "xyz"
    if ext in ("ply", "obj"):
        return ext
    raise FileFormatError(f"cannot infer format from {path.name!r}")


def _read_xyz(path: Path) -> PointCloud:
    positions, normals = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                values = [float(x) for x in parts]
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: {exc}") from None
            if len(values) == 3:
                positions.append(values)
            elif len(values) == 6:
                positions.append(values[:3])
                normals.append(values[3:])
            else:
                raise FileFormatError(
                    f"{path}:{lineno}: expected 3 or 6 numbers, got {len(values)}"
                )
    if normals and len(normals) != len(positions):
        raise FileFormatError(f"{path}: mixed lines with and without normals")
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    nrm = None
    if normals:
        nrm = np.asarray(normals, dtype=np.float64)
        lengths = np.linalg.norm(nrm, axis=1, keepdims=True)
        lengths[lengths == 0.0] = 1.0
        nrm = nrm / lengths
    return PointCloud(positions=pos, normals=nrm)


def write_point_cloud(path, cloud: PointCloud):
    with open(path, "w") as fh:
        if cloud.normals is None:
            for p in cloud.positions:
                fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        else:
            for p, n in zip(cloud.positions, cloud.normals):
                fh.write(
                    f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g} "
                    f"{n[0]:.17g} {n[1]:.17g} {n[2]:.17g}\n"
                )


def _read_obj(path: Path):
    positions, faces = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise FileFormatError(f"{path}:{lineno}: short vertex line")
                positions.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for token in parts[1:]:
                    head = token.split("/")[0]
                    idx.append(int(head))
                if len(idx) != 3:
                    raise FileFormatError(f"{path}:{lineno}: only triangles supported")
                faces.append([i - 1 if i > 0 else len(positions) + i for i in idx])
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    tri = np.asarray(faces, dtype=np.int64).reshape(-1, 3) if faces else None
    return pos, tri


_PLY_TYPES = {
    "float": ("f", 4), "float32": ("f", 4),
    "double": ("d", 8), "float64": ("d", 8),
    "uchar": ("B", 1), "uint8": ("B", 1), "char": ("b", 1), "int8": ("b", 1),
    "short": ("h", 2), "ushort": ("H", 2), "int16": ("h", 2), "uint16": ("H", 2),
    "int": ("i", 4), "int32": ("i", 4), "uint": ("I", 4), "uint32": ("I", 4),
}


def _read_ply(path: Path):
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"ply":
            raise FileFormatError(f"{path}: not a ply file")
        fmt = None
        elements = []  # (name, count, [(prop_name, type, list_count_type?)])
        while True:
            line = fh.readline()
            if not line:
                raise FileFormatError(f"{path}: truncated header")
            tokens = line.decode("ascii").split()
            if not tokens:
                continue
            if tokens[0] == "format":
                fmt = tokens[1]
            elif tokens[0] == "element":
                elements.append((tokens[1], int(tokens[2]), []))
            elif tokens[0] == "property":
                if tokens[1] == "list":
                    elements[-1][2].append((tokens[4], tokens[3], tokens[2]))
                else:
                    elements[-1][2].append((tokens[2], tokens[1], None))
            elif tokens[0] == "end_header":
                break
        if fmt not in ("ascii", "binary_little_endian"):
            raise FileFormatError(f"{path}: unsupported ply format {fmt!r}")
        positions = normals = faces = None
        for name, count, props in elements:
            if fmt == "ascii":
                rows = _ply_ascii_rows(fh, count, props, path)
            else:
                rows = _ply_binary_rows(fh, count, props, path)
            if name == "vertex":
                cols = {p[0]: i for i, p in enumerate(props)}
                if not all(a in cols for a in "xyz"):
                    raise FileFormatError(f"{path}: vertex element lacks x/y/z")
                positions = np.array(
                    [[r[cols["x"]], r[cols["y"]], r[cols["z"]]] for r in rows]
                )
                if all(a in cols for a in ("nx", "ny", "nz")):
                    normals = np.array(
                        [[r[cols["nx"]], r[cols["ny"]], r[cols["nz"]]] for r in rows]
                    )
                    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
                    lengths[lengths == 0.0] = 1.0
                    normals = normals / lengths
            elif name == "face":
                lists = [r[0] for r in rows]
                for v in lists:
                    if len(v) != 3:
                        raise FileFormatError(f"{path}: only triangle faces supported")
                faces = np.asarray(lists, dtype=np.int64)
        if positions is None:
            raise FileFormatError(f"{path}: no vertex element")
        return positions, normals, faces


def _ply_ascii_rows(fh, count, props, path):
    rows = []
    for _ in range(count):
        tokens = fh.readline().decode("ascii").split()
        row = []
        pos = 0
        for _, _, list_count_type in props:
            if list_count_type is None:
                row.append(float(tokens[pos]))
                pos += 1
            else:
                n = int(tokens[pos])
                row.append([int(x) for x in tokens[pos + 1 : pos + 1 + n]])
                pos += 1 + n
        rows.append(row)
    return rows


def _ply_binary_rows(fh, count, props, path):
    rows = []
    for _ in range(count):
        row = []
        for _, typ, list_count_type in props:
            if list_count_type is None:
                code, size = _PLY_TYPES[typ]
                (val,) = struct.unpack("<" + code, fh.read(size))
                row.append(float(val))
            else:
                ccode, csize = _PLY_TYPES[list_count_type]
                (n,) = struct.unpack("<" + ccode, fh.read(csize))
                icode, isize = _PLY_TYPES[typ]
                vals = struct.unpack("<" + icode * n, fh.read(isize * n))
                row.append([int(v) for v in vals])
        rows.append(row)
    return rows


def write_mesh(path, mesh: TriangleMesh, fmt: str | None = None, mark_nonmanifold: bool = False):
    """Write obj or ascii ply; open-edge faces can be marked (red face color).

    obj marking uses usemtl groups (plus a sidecar .mtl); ply marking uses
    per-face colors.
    """
    path = Path(path)
    fmt = fmt or _infer_format(path)
    flagged = _nonmanifold_faces(mesh) if mark_nonmanifold else np.zeros(mesh.n_triangles, dtype=bool)
    if fmt in ("obj", "obj-vertices"):
        _write_obj(path, mesh, flagged, mark_nonmanifold)
    elif fmt in ("ply", "ply-ascii"):
        _write_ply_ascii(path, mesh, flagged, mark_nonmanifold)
    else:
        raise FileFormatError(f"unknown mesh output format {fmt!r}")


def _nonmanifold_faces(mesh: TriangleMesh) -> np.ndarray:
    adjacency = build_edge_adjacency(mesh)
    flagged = np.zeros(mesh.n_triangles, dtype=bool)
    for tris in adjacency.incidence.values():
        if len(tris) != 2:
            for t in tris:
                flagged[t] = True
    return flagged


def _write_obj(path: Path, mesh: TriangleMesh, flagged, mark: bool):
    with open(path, "w") as fh:
        if mark:
            mtl = path.with_suffix(".mtl")
            with open(mtl, "w") as mf:
                mf.write("newmtl regular\nKd 0.8 0.8 0.8\n")
                mf.write("newmtl nonmanifold\nKd 1.0 0.0 0.0\n")
            fh.write(f"mtllib {mtl.name}\n")
        for p in mesh.positions:
            fh.write(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        current = None
        for t, (a, b, c) in enumerate(mesh.triangles):
            if mark:
                want = "nonmanifold" if flagged[t] else "regular"
                if want != current:
                    fh.write(f"usemtl {want}\n")
                    current = want
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")


def _write_ply_ascii(path: Path, mesh: TriangleMesh, flagged, mark: bool):
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {len(mesh.positions)}\n")
        fh.write("property double x\nproperty double y\nproperty double z\n")
        fh.write(f"element face {mesh.n_triangles}\n")
        fh.write("property list uchar int vertex_indices\n")
        if mark:
            fh.write("property uchar red\nproperty uchar green\nproperty uchar blue\n")
        fh.write("end_header\n")
        for p in mesh.positions:
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        for t, (a, b, c) in enumerate(mesh.triangles):
            if mark:
                color = "255 0 0" if flagged[t] else "200 200 200"
                fh.write(f"3 {a} {b} {c} {color}\n")
            else:
                fh.write(f"3 {a} {b} {c}\n")
