"""Synchronization of neighboring log maps by rigid alignment and consensus.

Each patch is aligned to every neighbor sharing at least three points with
a closed-form 2D Kabsch fit. A point's images under all aligned neighbor
charts are clustered with DBSCAN; the dominant cluster's weighted mean
replaces the point's coordinate, pulling neighboring charts toward mutual
agreement without ever building a global parameterization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .logmaps import LogMap2D


@dataclass(frozen=True)
class RigidTransform2D:
    """x -> matrix @ x + translation, matrix orthogonal with det +/-1."""

    matrix: np.ndarray
    translation: np.ndarray

    def apply(self, pts: np.ndarray) -> np.ndarray:
        return pts @ self.matrix.T + self.translation

    def inverse(self) -> "RigidTransform2D":
        return RigidTransform2D(matrix=self.matrix.T, translation=-(self.matrix.T @ self.translation))

    @property
    def is_reflection(self) -> bool:
        return float(np.linalg.det(self.matrix)) < 0.0


def _fit_rotation(src_c: np.ndarray, dst_c: np.ndarray, reflect: bool) -> np.ndarray:
    """Best orthogonal 2x2 with fixed handedness for centered correspondences."""
    m = src_c.T @ dst_c  # cross-covariance
    if not reflect:
        # maximize trace(R M) over rotations: closed form via atan2
        theta = np.arctan2(m[0, 1] - m[1, 0], m[0, 0] + m[1, 1])
        c, s = np.cos(theta), np.sin(theta)
        return np.array([[c, -s], [s, c]])
    # improper branch: rotation composed with a fixed flip of y
    flip = np.array([[1.0, 0.0], [0.0, -1.0]])
    mf = flip @ m
    theta = np.arctan2(mf[0, 1] - mf[1, 0], mf[0, 0] + mf[1, 1])
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]]) @ flip


def kabsch2d(src, dst, allow_reflection: bool = False) -> RigidTransform2D:
    """Least-squares rigid transform taking src onto dst.

    Reflections are admitted only when allowed; with all-coincident points
    the rotation degenerates to the identity and only the centroids align.
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    if src.shape != dst.shape or len(src) < 2:
        raise ValueError("need two equal-length correspondence lists (>= 2 points)")
    sc, dc = src.mean(axis=0), dst.mean(axis=0)
    src_c, dst_c = src - sc, dst - dc
    if np.abs(src_c).max() == 0.0 and np.abs(dst_c).max() == 0.0:
        return RigidTransform2D(matrix=np.eye(2), translation=dc - sc)
    best = _fit_rotation(src_c, dst_c, reflect=False)
    if allow_reflection:
        ref = _fit_rotation(src_c, dst_c, reflect=True)
        if _residual(src_c, dst_c, ref) < _residual(src_c, dst_c, best):
            best = ref
    return RigidTransform2D(matrix=best, translation=dc - best @ sc)


def _residual(src_c, dst_c, rot) -> float:
    diff = src_c @ rot.T - dst_c
    return float((diff * diff).sum())


def alignment_residual(src, dst, transform: RigidTransform2D) -> float:
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    diff = transform.apply(src) - dst
    return float((diff * diff).sum())


def dbscan(points, eps: float, min_pts: int) -> np.ndarray:
    """Plain DBSCAN labels (-1 noise), deterministic in input order."""
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    if n == 0:
        return np.empty(0, dtype=np.int64)
    diff = pts[:, None, :] - pts[None, :, :]
    within = (diff * diff).sum(axis=2) <= eps * eps
    if within.all():
        # fully mutually dense set: one cluster, or all noise if too small
        if n >= min_pts:
            return np.zeros(n, dtype=np.int64)
        return np.full(n, -1, dtype=np.int64)
    neighbor_count = within.sum(axis=1)  # includes self
    core = neighbor_count >= min_pts
    labels = np.full(n, -2, dtype=np.int64)  # -2 unvisited, -1 noise
    cluster = -1
    for i in range(n):
        if labels[i] != -2:
            continue
        if not core[i]:
            labels[i] = -1
            continue
        cluster += 1
        labels[i] = cluster
        queued = within[i].copy()  # dedups frontier insertions
        frontier = [int(j) for j in np.flatnonzero(within[i]) if j != i]
        qi = 0
        while qi < len(frontier):
            j = frontier[qi]
            qi += 1
            if labels[j] == -1:
                labels[j] = cluster  # border point
                continue
            if labels[j] != -2:
                continue
            labels[j] = cluster
            if core[j]:
                fresh = within[j] & ~queued
                queued |= within[j]
                frontier.extend(int(x) for x in np.flatnonzero(fresh))
    labels[labels == -2] = -1
    return labels


@dataclass(frozen=True)
class SyncConfig:
    eps_factor: float = 0.75  # times median nearest-neighbor spacing in the chart
    min_pts: int = 2
    eps_override: float | None = None
    min_pts_override: int | None = None
    reflection_margin: float = 2.0  # improper fit must beat proper by this factor
    passes: int = 1


@dataclass
class SyncStats:
    aligned_pairs: int = 0
    skipped_pairs: int = 0
    reflections: int = 0
    isolated_patches: int = 0


class _PatchTable:
    """Chart coordinates indexed by point id, center included at (0, 0)."""

    def __init__(self, patches: list[LogMap2D]):
        self.patches = patches
        self.point_ids: list[np.ndarray] = []
        self.coords: list[np.ndarray] = []
        membership: dict[int, list[int]] = {}
        for pi, lm in enumerate(patches):
            ids = np.concatenate([[lm.center_id], lm.member_ids]).astype(np.int64)
            xy = np.vstack([np.zeros(2), lm.coords])
            self.point_ids.append(ids)
            self.coords.append(xy)
            for pid in ids:
                membership.setdefault(int(pid), []).append(pi)
        self.membership = {pid: np.array(v, dtype=np.int64) for pid, v in membership.items()}
        self.id_to_row = [
            {int(pid): row for row, pid in enumerate(ids)} for ids in self.point_ids
        ]
        # sorted views for vectorized shared-point lookups
        self.sorted_ids = []
        self.sorted_rows = []
        for ids in self.point_ids:
            order = np.argsort(ids)
            self.sorted_ids.append(ids[order])
            self.sorted_rows.append(order)
        self.mean_radius = np.array([max(lm.mean_radius, 1e-300) for lm in patches])
        # per-row consensus weight: images near their own chart's center
        # are trusted more
        self.row_weight = [
            1.0 / (1.0 + np.linalg.norm(xy, axis=1) / self.mean_radius[pi])
            for pi, xy in enumerate(self.coords)
        ]

    def neighbor_counts(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Patches sharing any point with patch i, with shared-point counts."""
        stacked = np.concatenate([self.membership[int(pid)] for pid in self.point_ids[i]])
        neighbors, counts = np.unique(stacked, return_counts=True)
        keep = neighbors != i
        return neighbors[keep], counts[keep]


class _PairFitCache:
    """Rigid fits between chart pairs, computed once per unordered pair."""

    def __init__(self, table: _PatchTable, config: SyncConfig, stats: SyncStats | None):
        self.table = table
        self.config = config
        self.stats = stats
        self._fits: dict[tuple[int, int], RigidTransform2D | None] = {}

    def into_frame(self, i: int, j: int) -> RigidTransform2D | None:
        """Transform taking patch j's chart into patch i's frame, or None."""
        key = (i, j) if i < j else (j, i)
        if key not in self._fits:
            self._fits[key] = self._fit(*key)
        fit = self._fits[key]
        if fit is None:
            return None
        return fit if (i, j) == key else fit.inverse()

    def _fit(self, a: int, b: int) -> RigidTransform2D | None:
        """Best transform mapping chart b onto chart a over shared points."""
        t = self.table
        common = np.intersect1d(t.sorted_ids[a], t.sorted_ids[b], assume_unique=True)
        if len(common) < 3:
            if self.stats:
                self.stats.skipped_pairs += 1
            return None
        rows_a = t.sorted_rows[a][np.searchsorted(t.sorted_ids[a], common)]
        rows_b = t.sorted_rows[b][np.searchsorted(t.sorted_ids[b], common)]
        src = t.coords[b][rows_b]
        dst = t.coords[a][rows_a]
        sc, dc = src.mean(axis=0), dst.mean(axis=0)
        src_c, dst_c = src - sc, dst - dc
        m = src_c.T @ dst_c
        # residual(R) = S - 2 trace(R m); the trace maxima have closed forms
        s_total = float((src_c * src_c).sum() + (dst_c * dst_c).sum())
        gain_proper = 2.0 * float(np.hypot(m[0, 0] + m[1, 1], m[0, 1] - m[1, 0]))
        gain_improper = 2.0 * float(np.hypot(m[0, 0] - m[1, 1], m[0, 1] + m[1, 0]))
        r_proper = s_total - gain_proper
        r_improper = s_total - gain_improper
        reflect = r_proper > self.config.reflection_margin * r_improper
        matrix = _fit_rotation(src_c, dst_c, reflect=reflect)
        if self.stats:
            self.stats.aligned_pairs += 1
            if reflect:
                self.stats.reflections += 1
        return RigidTransform2D(matrix=matrix, translation=dc - matrix @ sc)


def align_neighbors(patches: list[LogMap2D], i: int, config: SyncConfig | None = None) -> dict[int, np.ndarray]:
    """Map every neighboring chart into patch i's frame.

    Returns {patch index j: aligned (rows_j, 2) coordinates} for each patch
    j sharing at least three points with patch i (center rows included);
    patches sharing fewer are skipped silently.
    """
    table = _PatchTable(patches)
    cache = _PairFitCache(table, config or SyncConfig(), None)
    return _aligned_charts(table, cache, i)


def _aligned_charts(table: _PatchTable, cache: _PairFitCache, i: int) -> dict[int, np.ndarray]:
    neighbors, counts = table.neighbor_counts(i)
    aligned: dict[int, np.ndarray] = {}
    for j, shared in zip(neighbors, counts):
        if shared < 3:
            continue
        fit = cache.into_frame(i, int(j))
        if fit is not None:
            aligned[int(j)] = fit.apply(table.coords[int(j)])
    return aligned


def synchronize(
    patches: list[LogMap2D], config: SyncConfig | None = None
) -> tuple[list[LogMap2D], SyncStats]:
    """Consensus passes over all patches; centers stay at (0, 0) exactly.

    For each member point of each patch, the images under all aligned
    neighbor charts are DBSCAN-clustered; the member coordinate moves to
    the weighted mean of the dominant cluster (ties break toward the
    cluster nearest the patch's own image). Weights favor images close to
    the center of the chart that produced them. Patches with no aligned
    neighbor are returned unchanged.
    """
    config = config or SyncConfig()
    stats = SyncStats()
    current = patches
    for _ in range(max(config.passes, 1)):
        current = _sync_pass(current, config, stats)
    return current, stats


def _sync_pass(patches: list[LogMap2D], config: SyncConfig, stats: SyncStats) -> list[LogMap2D]:
    table = _PatchTable(patches)
    cache = _PairFitCache(table, config, stats)
    out: list[LogMap2D] = []
    for i, lm in enumerate(patches):
        if lm.k == 0:
            out.append(lm)
            continue
        aligned = _aligned_charts(table, cache, i)
        if not aligned:
            stats.isolated_patches += 1
            out.append(lm)
            continue
        eps = config.eps_override
        if eps is None:
            eps = config.eps_factor * _median_nn_spacing(table.coords[i])
        min_pts = config.min_pts_override or config.min_pts
        new_coords = lm.coords.copy()
        for member_row, pid in enumerate(lm.member_ids):
            pid = int(pid)
            row = member_row + 1  # chart rows are center-prefixed
            images = [table.coords[i][row]]
            weights = [table.row_weight[i][row]]
            for j in table.membership[pid]:
                j = int(j)
                if j == i or j not in aligned:
                    continue
                row_j = table.id_to_row[j][pid]
                images.append(aligned[j][row_j])
                weights.append(table.row_weight[j][row_j])
            if len(images) == 1:
                continue
            images_arr = np.asarray(images)
            weights_arr = np.asarray(weights)
            labels = dbscan(images_arr, eps=eps, min_pts=min_pts)
            pick = _dominant_cluster(images_arr, weights_arr, labels, own=images_arr[0])
            if pick is None:
                continue
            sel = labels == pick
            w = weights_arr[sel]
            new_coords[member_row] = (images_arr[sel] * w[:, None]).sum(axis=0) / w.sum()
        out.append(
            LogMap2D(
                center_id=lm.center_id,
                member_ids=lm.member_ids,
                coords=new_coords,
                estimator=lm.estimator,
            )
        )
    return out


def _median_nn_spacing(coords: np.ndarray) -> float:
    if len(coords) < 2:
        return 1.0
    diff = coords[:, None, :] - coords[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(d, np.inf)
    nn = d.min(axis=1)
    med = float(np.median(nn))
    if med > 0.0:
        return med
    positive = nn[nn > 0.0]
    return float(positive.mean()) if len(positive) else 1.0


def _dominant_cluster(images, weights, labels, own) -> int | None:
    """Largest cluster; ties break toward the one nearest the patch's own image."""
    ids = [c for c in np.unique(labels) if c >= 0]
    if not ids:
        return None
    sizes = {c: int((labels == c).sum()) for c in ids}
    top = max(sizes.values())
    tied = [c for c in ids if sizes[c] == top]
    if len(tied) == 1:
        return int(tied[0])
    best, best_d = None, np.inf
    for c in tied:
        sel = labels == c
        w = weights[sel]
        mean = (images[sel] * w[:, None]).sum(axis=0) / w.sum()
        d = float(np.linalg.norm(mean - own))
        if d < best_d:
            best, best_d = int(c), d
    return best
