"""End-to-end reconstruction: patches -> charts -> elements -> mesh.

Per point: K Euclidean candidates, geodesic subset of k, a 2D chart, then
(optionally) chart synchronization, per-patch Delaunay, umbrella
extraction, and greedy manifold-capped selection. Ablation switches mirror
the pipeline stages: --no-align skips synchronization, --no-select emits
the deduplicated union of all element triangles.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .alignment import SyncConfig, SyncStats, synchronize
from .delaunay import DelaunaySurfaceElement, delaunay2d, extract_dse
from .geometry import DegenerateGeometryError, PointCloud, TriangleMesh
from .knn import KnnIndex
from .logmaps import ESTIMATORS, LogMap2D, estimate_neural
from .metrics import MeshReport, angle_stats, nonwatertight_ratio
from .neighborhoods import (
    GeodesicPatch,
    candidates_from_rows,
    select_geodesic_heuristic,
    select_geodesic_neural,
)
from .selection import count_memberships, dedup_union, greedy_select


@dataclass(frozen=True)
class PipelineConfig:
    K: int = 120
    k: int = 30
    neighborhood: str = "heuristic"  # heuristic | neural
    estimator: str = "projection"  # projection | rotation | neural
    align: bool = True
    select: bool = True
    graph_degree: int = 8
    dbscan_eps: float | None = None
    dbscan_min_pts: int | None = None
    sync_passes: int = 1
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not (3 <= self.k <= self.K):
            raise ValueError(f"need 3 <= k <= K, got k={self.k} K={self.K}")
        if self.neighborhood not in ("heuristic", "neural"):
            raise ValueError(f"unknown neighborhood mode {self.neighborhood!r}")
        if self.estimator not in ("projection", "rotation", "neural"):
            raise ValueError(f"unknown estimator {self.estimator!r}")


@dataclass
class Diagnostics:
    timings: dict[str, float] = field(default_factory=dict)
    count3_fraction: float = 0.0
    candidate_counts: dict[int, int] = field(default_factory=dict)
    degenerate_patches: int = 0
    boundary_elements: int = 0
    heuristic_fallbacks: int = 0
    sync: SyncStats | None = None
    k_shrunk_to: int | None = None
    warnings: list[str] = field(default_factory=list)
    table: object = None  # CandidateTable of the final counting stage


def _validate_cloud(cloud: PointCloud):
    if len(cloud) < 4:
        raise DegenerateGeometryError("need at least 4 points")
    centered = cloud.positions - cloud.positions.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[0] <= 0.0 or sv[1] <= 1e-12 * sv[0]:
        raise DegenerateGeometryError("cloud is collinear or coincident")


def reconstruct(
    cloud: PointCloud,
    config: PipelineConfig,
    weights: tuple | None = None,
) -> tuple[TriangleMesh, MeshReport, Diagnostics]:
    """Reconstruct a triangle mesh over a subset of the cloud's points.

    `weights` carries (classifier, projector) NetworkWeights; either entry
    may be None when the corresponding stage runs in geometric mode.
    """
    _validate_cloud(cloud)
    diag = Diagnostics()
    n = len(cloud)
    classifier_w, projector_w = weights if weights is not None else (None, None)
    neural_neigh = config.neighborhood == "neural"
    neural_est = config.estimator == "neural"
    if neural_neigh and classifier_w is None:
        raise ValueError("neural neighborhood mode requires classifier weights")
    if neural_est and projector_w is None:
        raise ValueError("neural estimator requires projector weights")
    K = config.K
    if (neural_neigh or neural_est) and n < K + 1:
        raise ValueError(f"neural mode needs N >= K+1 = {K + 1}, got {n}")
    if K > n - 1:
        K = n - 1
        diag.k_shrunk_to = K
        msg = f"K shrunk from {config.K} to {K} (cloud has {n} points)"
        diag.warnings.append(msg)
        warnings.warn(msg)
    k = min(config.k, K)

    t0 = time.perf_counter()
    index = KnnIndex(cloud)
    nbr_ids, nbr_d = index.knn_all(K)
    diag.timings["knn"] = time.perf_counter() - t0

    # geodesic patch per point
    t0 = time.perf_counter()
    patches: list[GeodesicPatch] = []
    for i in range(n):
        cand = candidates_from_rows(
            i, nbr_ids[i], nbr_d[i], cloud.positions[nbr_ids[i]] - cloud.positions[i]
        )
        if neural_neigh:
            patch = select_geodesic_neural(cand, classifier_w, k)
        else:
            patch = select_geodesic_heuristic(cand, k, g=config.graph_degree)
            if patch.fallback:
                diag.heuristic_fallbacks += 1
        patches.append(patch)
    diag.timings["neighborhoods"] = time.perf_counter() - t0

    # chart per patch
    t0 = time.perf_counter()
    charts: list[LogMap2D] = []
    for patch in patches:
        if neural_est:
            charts.append(estimate_neural(patch, projector_w))
        else:
            charts.append(ESTIMATORS[config.estimator](patch))
    diag.timings["logmap_estimation"] = time.perf_counter() - t0

    # synchronization
    t0 = time.perf_counter()
    if config.align:
        sync_cfg = SyncConfig(
            eps_override=config.dbscan_eps,
            min_pts_override=config.dbscan_min_pts,
            passes=config.sync_passes,
        )
        charts, diag.sync = synchronize(charts, sync_cfg)
    diag.timings["logmap_alignment"] = time.perf_counter() - t0

    # per-patch Delaunay and umbrella extraction
    t0 = time.perf_counter()
    dses = _triangulate_charts(charts, config.workers, diag)
    diag.timings["triangulation"] = time.perf_counter() - t0

    # selection
    t0 = time.perf_counter()
    table = count_memberships(dses)
    diag.table = table
    diag.candidate_counts = {
        c: sum(1 for v in table.counts.values() if v == c) for c in (1, 2, 3)
    }
    total_candidates = max(len(table.counts), 1)
    diag.count3_fraction = diag.candidate_counts.get(3, 0) / total_candidates
    if config.select:
        mesh = greedy_select(table, cloud)
    else:
        mesh = dedup_union(dses, cloud)
    diag.timings["selection"] = time.perf_counter() - t0

    if mesh.n_triangles:
        stddev, hist = angle_stats(mesh)
    else:
        stddev, hist = 0.0, np.zeros(180, dtype=np.int64)
    report = MeshReport(
        nw_percent=nonwatertight_ratio(mesh) if mesh.n_triangles else 0.0,
        angle_stddev_deg=stddev,
        angle_histogram=hist,
        extras={
            "count3_fraction": diag.count3_fraction,
            "n_triangles": mesh.n_triangles,
            "n_vertices": len(mesh.vertex_ids),
        },
    )
    return mesh, report, diag


def _chart_job(args):
    center_id, member_ids, coords = args
    pts = np.vstack([np.zeros(2), coords])
    ids = np.concatenate([[center_id], member_ids]).astype(np.int64)
    try:
        tri = delaunay2d(pts, keys=ids)
    except DegenerateGeometryError:
        return None
    return extract_dse(tri, 0, ids)


def _triangulate_charts(charts: list[LogMap2D], workers: int, diag: Diagnostics):
    jobs = [(lm.center_id, lm.member_ids, lm.coords) for lm in charts]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chart_job, jobs, chunksize=64))
    else:
        results = [_chart_job(j) for j in jobs]
    dses: list[DelaunaySurfaceElement] = []
    for r in results:
        if r is None:
            diag.degenerate_patches += 1
            continue
        if r.boundary:
            diag.boundary_elements += 1
        if not r.empty:
            dses.append(r)
    return dses


def sweep(
    cloud: PointCloud,
    configs: list[PipelineConfig],
    weights: tuple | None = None,
    evaluate=None,
) -> list[dict]:
    """Run reconstruct per config; failures are recorded, not raised.

    `evaluate`, when given, is called with the produced mesh and returns a
    dict merged into that row (reference-based metrics).
    """
    rows = []
    for cfg in configs:
        row: dict = {"K": cfg.K, "k": cfg.k, "estimator": cfg.estimator}
        try:
            mesh, report, diag = reconstruct(cloud, cfg, weights=weights)
            row.update(
                nw_percent=report.nw_percent,
                angle_stddev_deg=report.angle_stddev_deg,
                n_triangles=mesh.n_triangles,
                count3_fraction=report.extras["count3_fraction"],
            )
            if evaluate is not None:
                row.update(evaluate(mesh))
        except Exception as exc:  # per-config errors recorded, sweep continues
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows
