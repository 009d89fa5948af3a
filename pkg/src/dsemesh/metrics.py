"""Mesh quality / accuracy metrics and the 2D chart error measures.

The headline numbers: percentage of non-watertight (single-triangle) edges,
symmetric Chamfer distance between dense surface samplings, mean unsigned
normal deviation in degrees, and the population standard deviation of
triangle angles with a 1-degree histogram.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .alignment import kabsch2d
from .geometry import PointCloud, TriangleMesh, build_edge_adjacency


@dataclass
class MeshReport:
    """Evaluation summary; accuracy fields stay None without a reference."""

    nw_percent: float
    angle_stddev_deg: float
    angle_histogram: np.ndarray = field(repr=False)  # 180 bins of 1 degree
    chamfer: float | None = None
    normal_error_deg: float | None = None
    chamfer_samples: int | None = None
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "nw_percent": self.nw_percent,
            "angle_stddev_deg": self.angle_stddev_deg,
            "chamfer": self.chamfer,
            "normal_error_deg": self.normal_error_deg,
            "chamfer_samples": self.chamfer_samples,
            "angle_histogram": self.angle_histogram.tolist(),
        }
        out.update(self.extras)
        return out


def nonwatertight_ratio(mesh: TriangleMesh) -> float:
    """100 * (# edges with exactly one incident triangle) / (# edges)."""
    adjacency = build_edge_adjacency(mesh)
    n_edges = len(adjacency.incidence)
    if n_edges == 0:
        import warnings

        warnings.warn("empty mesh has no edges; reporting 0% non-watertight")
        return 0.0
    open_edges = sum(1 for tris in adjacency.incidence.values() if len(tris) == 1)
    return 100.0 * open_edges / n_edges


def chamfer(a: PointCloud, b: PointCloud) -> float:
    """Symmetric nearest-neighbor distance, each sum divided by its own size."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("chamfer distance needs two non-empty clouds")
    tree_a = cKDTree(a.positions)
    tree_b = cKDTree(b.positions)
    d_ab, _ = tree_b.query(a.positions)
    d_ba, _ = tree_a.query(b.positions)
    return float(d_ab.mean() + d_ba.mean())


def vertex_normals(mesh: TriangleMesh) -> tuple[np.ndarray, np.ndarray]:
    """Area-weighted per-vertex normals; second array flags vertices with faces."""
    normals = np.zeros((len(mesh.vertex_ids), 3))
    corners = mesh.triangle_positions()
    cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    for t, (i, j, k) in enumerate(mesh.triangles):
        normals[i] += cross[t]
        normals[j] += cross[t]
        normals[k] += cross[t]
    lengths = np.linalg.norm(normals, axis=1)
    has_face = np.zeros(len(normals), dtype=bool)
    has_face[np.unique(mesh.triangles)] = True
    ok = lengths > 0.0
    normals[ok] /= lengths[ok, None]
    return normals, has_face & ok


def normal_error(mesh: TriangleMesh, reference_normals) -> float:
    """Mean unsigned angle (degrees) between mesh vertex normals and references.

    reference_normals: (V, 3), one per mesh vertex. Vertices without any
    incident triangle are excluded.
    """
    ref = np.asarray(reference_normals, dtype=np.float64)
    if ref.shape != (len(mesh.vertex_ids), 3):
        raise ValueError("need one reference normal per mesh vertex")
    est, ok = vertex_normals(mesh)
    if not ok.any():
        raise ValueError("mesh has no vertices with incident triangles")
    dots = np.abs(np.einsum("ij,ij->i", est[ok], ref[ok]))
    dots = np.clip(dots, -1.0, 1.0)
    return float(np.degrees(np.arccos(dots)).mean())


def triangle_angles(mesh: TriangleMesh) -> np.ndarray:
    """(T, 3) interior angles in degrees; degenerate triangles give {0, 0, 180}."""
    corners = mesh.triangle_positions()
    out = np.zeros((len(corners), 3))
    for shift in range(3):
        a = corners[:, shift]
        b = corners[:, (shift + 1) % 3]
        c = corners[:, (shift + 2) % 3]
        u, v = b - a, c - a
        lu = np.linalg.norm(u, axis=1)
        lv = np.linalg.norm(v, axis=1)
        denom = lu * lv
        cosv = np.ones(len(corners))
        nz = denom > 0.0
        cosv[nz] = np.einsum("ij,ij->i", u[nz], v[nz]) / denom[nz]
        out[:, shift] = np.degrees(np.arccos(np.clip(cosv, -1.0, 1.0)))
    return out


def angle_stats(mesh: TriangleMesh) -> tuple[float, np.ndarray]:
    """Population stddev of all interior angles plus a 1-degree histogram."""
    if mesh.n_triangles == 0:
        raise ValueError("empty mesh has no angles")
    angles = triangle_angles(mesh).ravel()
    hist, _ = np.histogram(angles, bins=180, range=(0.0, 180.0))
    return float(angles.std()), hist


def evaluate_against_reference(
    mesh: TriangleMesh,
    reference: TriangleMesh,
    samples: int = 100_000,
    seed: int = 0,
) -> MeshReport:
    """Full report for a mesh against a reference surface.

    Chamfer uses dense area-uniform samplings of both surfaces; the
    reference normal at each mesh vertex is the face normal of the nearest
    reference sample.
    """
    from .geometry import sample_surface

    stddev, hist = angle_stats(mesh)
    mesh_samples = sample_surface(mesh, samples, seed)
    ref_samples = sample_surface(reference, samples, seed + 1)
    cd = chamfer(mesh_samples, ref_samples)
    tree = cKDTree(ref_samples.positions)
    _, nearest = tree.query(mesh.positions)
    ref_normals = ref_samples.normals[nearest]
    nr = normal_error(mesh, ref_normals)
    return MeshReport(
        nw_percent=nonwatertight_ratio(mesh),
        angle_stddev_deg=stddev,
        angle_histogram=hist,
        chamfer=cd,
        normal_error_deg=nr,
        chamfer_samples=samples,
        extras={"n_triangles": mesh.n_triangles, "n_vertices": len(mesh.vertex_ids)},
    )


def logmap_mse(estimated, gt) -> tuple[float, float]:
    """(geodesic_mse, position_mse) of an estimated chart against ground truth.

    The geodesic term compares radial lengths; the position term compares
    coordinates after an optimal rigid alignment (reflection allowed), so
    it is invariant to the chart's arbitrary orientation.
    """
    est_ids = np.asarray(estimated.member_ids)
    gt_ids = np.asarray(gt.neighbor_ids)
    if not np.array_equal(est_ids, gt_ids):
        raise ValueError("estimated and ground-truth member ids differ")
    u = np.asarray(estimated.coords, dtype=np.float64)
    v = np.asarray(gt.coords, dtype=np.float64)
    ru = np.linalg.norm(u, axis=1)
    rv = np.linalg.norm(v, axis=1)
    geodesic_mse = float(((ru - rv) ** 2).mean())
    fit = kabsch2d(u, v, allow_reflection=True)
    diff = fit.apply(u) - v
    position_mse = float((diff * diff).sum(axis=1).mean())
    return geodesic_mse, position_mse
