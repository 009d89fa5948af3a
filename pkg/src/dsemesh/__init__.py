"""Point cloud meshing with locally Delaunay-triangulated geodesic patches."""

from .alignment import RigidTransform2D, SyncConfig, dbscan, kabsch2d, synchronize
from .delaunay import DelaunaySurfaceElement, Triangulation2D, delaunay2d, extract_dse
from .geodesics import (
    GroundTruthLogMap,
    ReferenceSurface,
    analytic_logmap,
    graph_geodesic_distances,
    gt_logmap,
)
from .geometry import (
    DegenerateGeometryError,
    EdgeAdjacency,
    PointCloud,
    TriangleMesh,
    build_edge_adjacency,
    canonical_triangle,
    estimate_normal_pca,
    sample_surface,
)
from .knn import KnnIndex, knn
from .logmaps import LogMap2D, estimate_neural, estimate_projection, estimate_rotation
from .metrics import (
    MeshReport,
    angle_stats,
    chamfer,
    evaluate_against_reference,
    logmap_mse,
    nonwatertight_ratio,
    normal_error,
)
from .neighborhoods import (
    CandidatePatch,
    GeodesicPatch,
    build_candidates,
    select_geodesic_heuristic,
    select_geodesic_neural,
)
from .network import (
    NetworkWeights,
    PatchFeatures,
    featurize,
    forward_classifier,
    forward_projector,
)
from .pipeline import Diagnostics, PipelineConfig, reconstruct, sweep
from .selection import CandidateTable, count_memberships, greedy_select

__version__ = "0.1.0"
