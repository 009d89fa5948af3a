"""Training-data generation from reference surfaces.

Treats the mesh vertices as the point cloud: each record holds one center's
K Euclidean candidates, the flags of the k geodesically closest candidates,
and their ground-truth chart coordinates.
"""

from __future__ import annotations

import numpy as np

from .formats import PatchDataset, PatchRecord
from .geodesics import GeodesicError, ReferenceSurface
from .geometry import PointCloud, TriangleMesh
from .knn import KnnIndex


def generate_patch_dataset(
    mesh: TriangleMesh,
    K: int = 120,
    k: int = 30,
    count: int | None = None,
    seed: int = 0,
) -> PatchDataset:
    """Sample centers on the mesh and build supervised patch records.

    count limits how many centers are used (random subset, seeded);
    None keeps every vertex. Centers whose K candidates contain fewer
    than k geodesically reachable vertices are skipped.
    """
    surface = ReferenceSurface(mesh)
    cloud = PointCloud(positions=mesh.positions)
    n = len(cloud)
    if K > n - 1:
        raise ValueError(f"K={K} exceeds N-1={n - 1}")
    index = KnnIndex(cloud)
    centers = np.arange(n)
    if count is not None and count < n:
        rng = np.random.default_rng(seed)
        centers = np.sort(rng.choice(n, size=count, replace=False))

    records = []
    skipped = 0
    for center in centers:
        rec = _build_record(surface, cloud, index, int(center), K, k)
        if rec is None:
            skipped += 1
        else:
            records.append(rec)
    if not records:
        raise GeodesicError("no usable centers (all skipped)")
    dataset = PatchDataset(K=K, k=k, records=tuple(records))
    return dataset


def _build_record(surface, cloud, index, center, K, k):
    cand_ids, cand_d = index.knn(center, K)
    dist, first = surface.dijkstra(center)
    geo = np.array([dist.get(int(c), np.inf) for c in cand_ids])
    reachable = np.isfinite(geo)
    if reachable.sum() < k:
        return None
    # k geodesically nearest candidates, ties by id
    order = np.lexsort((cand_ids, geo))[:k]
    flags = np.zeros(K, dtype=np.uint8)
    flags[order] = 1
    member_rows = np.flatnonzero(flags)  # candidate order
    coords = np.empty((k, 2))
    for j, row in enumerate(member_rows):
        v = int(cand_ids[row])
        d = geo[row]
        theta = surface._first_edge_angle(center, first[v])
        coords[j] = (d * np.cos(theta), d * np.sin(theta))
    rel = cloud.positions[cand_ids] - cloud.positions[center]
    return PatchRecord(
        center_id=center,
        candidate_ids=cand_ids,
        rel_positions=rel,
        distances=cand_d,
        member_flags=flags,
        gt_coords=coords,
    )
