"""Estimators mapping a geodesic patch to a 2D embedding around its center.

Three interchangeable variants: tangent-plane projection, rotation onto the
tangent plane (distance-preserving), and a learned projector network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import estimate_normal_pca, tangent_basis
from .neighborhoods import GeodesicPatch


@dataclass(frozen=True)
class LogMap2D:
    """Per-patch 2D embedding; the center sits at exactly (0, 0)."""

    center_id: int
    member_ids: np.ndarray
    coords: np.ndarray  # (k, 2) member coordinates, model units
    estimator: str

    @property
    def k(self) -> int:
        return len(self.member_ids)

    @property
    def mean_radius(self) -> float:
        return float(np.linalg.norm(self.coords, axis=1).mean()) if self.k else 0.0


def _patch_normal(patch: GeodesicPatch) -> np.ndarray:
    pts = np.vstack([np.zeros(3), patch.rel_positions])
    return estimate_normal_pca(pts)


def estimate_projection(patch: GeodesicPatch) -> LogMap2D:
    """Project member offsets onto the PCA tangent plane of the patch."""
    n = _patch_normal(patch)
    t1, t2 = tangent_basis(n)
    coords = np.stack([patch.rel_positions @ t1, patch.rel_positions @ t2], axis=1)
    return LogMap2D(
        center_id=patch.center_id,
        member_ids=patch.member_ids,
        coords=coords,
        estimator="projection",
    )


def estimate_rotation(patch: GeodesicPatch) -> LogMap2D:
    """Rotate each member about the center into the tangent plane.

    Keeps every member's Euclidean center distance as its radial coordinate;
    the angle comes from the tangent-plane projection. Members exactly on
    the normal line get angle 0 by convention.
    """
    n = _patch_normal(patch)
    t1, t2 = tangent_basis(n)
    proj = np.stack([patch.rel_positions @ t1, patch.rel_positions @ t2], axis=1)
    plen = np.linalg.norm(proj, axis=1)
    coords = np.zeros_like(proj)
    ok = plen > 0.0
    coords[ok] = proj[ok] / plen[ok, None] * patch.distances[ok, None]
    coords[~ok, 0] = patch.distances[~ok]
    return LogMap2D(
        center_id=patch.center_id,
        member_ids=patch.member_ids,
        coords=coords,
        estimator="rotation",
    )


def estimate_neural(patch: GeodesicPatch, weights) -> LogMap2D:
    """Run the projector network and re-center its output on the patch center."""
    from .network import featurize, forward_projector

    feats = featurize(patch)
    out = forward_projector(feats, weights)
    out = (out - out[0]) / feats.scale  # center row predicts the origin
    return LogMap2D(
        center_id=patch.center_id,
        member_ids=patch.member_ids,
        coords=out[1:],
        estimator="neural",
    )


ESTIMATORS = {
    "projection": estimate_projection,
    "rotation": estimate_rotation,
}


def degenerate_logmap(logmap: LogMap2D, tol: float = 0.0) -> bool:
    """All-coincident coordinates cannot support a triangulation."""
    if logmap.k < 3:
        return True
    spread = np.abs(logmap.coords - logmap.coords[0]).max()
    return bool(spread <= tol)
