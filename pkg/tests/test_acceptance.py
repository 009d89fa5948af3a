"""Acceptance suite: one test per criterion, each printing a summary line.

Primary criteria (1-11) run on the geometric pipeline alone. Secondary
criteria (12-14) exercise the trained networks and are skipped when the
pretrained weight files are absent (regenerate them with the training
package; see the README).
"""

import time
from pathlib import Path

import numpy as np
import pytest

from conftest import record_criterion
from dsemesh.alignment import RigidTransform2D, alignment_residual, dbscan, kabsch2d
from dsemesh.delaunay import delaunay2d
from dsemesh.geometry import PointCloud, build_edge_adjacency, sample_surface
from dsemesh.knn import KnnIndex
from dsemesh.metrics import angle_stats, chamfer, nonwatertight_ratio, normal_error
from dsemesh.pipeline import PipelineConfig, reconstruct
from dsemesh.predicates import incircle, orient2d
from dsemesh.shapes import (
    fibonacci_sphere_cloud,
    icosphere,
    rounded_cube_cloud,
    _triangular_lattice,
)

PRETRAINED = Path(__file__).resolve().parent.parent / "pretrained"

SPHERE_FIXTURE = fibonacci_sphere_cloud(2000)
CUBE_FIXTURE_ARGS = dict(n=2200, fillet=0.45, seed=11, jitter=0.25)


def plane_fixture():
    return PointCloud(positions=_triangular_lattice(40, 40, 1.0))


class TestCriterion1Delaunay:
    def test_empty_circumcircle_on_random_patches(self):
        rng = np.random.default_rng(0)
        start = time.perf_counter()
        checked = 0
        for _ in range(200):
            pts = rng.random((30, 2))
            tri = delaunay2d(pts)
            for t in tri.triangles:
                a, b, c = pts[t[0]], pts[t[1]], pts[t[2]]
                assert orient2d(a, b, c) > 0, "negative-area triangle"
                for j in range(30):
                    if j in t:
                        continue
                    assert incircle(a, b, c, pts[j]) <= 0, "circumcircle not empty"
                checked += 1
        elapsed = time.perf_counter() - start
        ok = elapsed < 5.0
        record_criterion(
            1, "Delaunay empty-circumcircle on 200 random 30-point patches",
            ok, f"{checked} triangles, {elapsed:.2f}s",
        )
        assert ok, f"runtime {elapsed:.2f}s exceeds 5s"


class TestCriterion2Kabsch:
    def test_optimality_and_exact_recovery(self):
        rng = np.random.default_rng(1)

        def rot(theta):
            c, s = np.cos(theta), np.sin(theta)
            return np.array([[c, -s], [s, c]])

        # exact-rotation fixtures
        for theta in np.linspace(0.0, 2 * np.pi, 8):
            src = rng.random((10, 2))
            dst = src @ rot(theta).T + rng.normal(size=2)
            fit = kabsch2d(src, dst)
            assert alignment_residual(src, dst, fit) < 1e-18

        # optimality against random-search on noisy correspondences
        for _ in range(100):
            n = int(rng.integers(3, 40))
            src = rng.random((n, 2))
            dst = src @ rot(rng.uniform(0, 2 * np.pi)).T + rng.normal(
                scale=0.05, size=(n, 2)
            )
            best = alignment_residual(src, dst, kabsch2d(src, dst))
            for _ in range(1000):
                cand = RigidTransform2D(
                    matrix=rot(rng.uniform(0, 2 * np.pi)),
                    translation=rng.normal(scale=0.5, size=2),
                )
                if alignment_residual(src, dst, cand) < best - 1e-12:
                    record_criterion(2, "Kabsch optimality", False)
                    raise AssertionError("random transform beat kabsch2d")
        record_criterion(2, "Kabsch optimality vs 1000-sample random search x100", True)


class TestCriterion3Dbscan:
    def test_oracle_equivalence(self):
        from test_alignment import naive_dbscan

        rng = np.random.default_rng(2)
        for trial in range(100):
            n = int(rng.integers(2, 200))
            pts = rng.random((n, 2)) * rng.uniform(0.5, 2.0)
            eps = float(rng.uniform(0.02, 0.4))
            min_pts = int(rng.integers(1, 6))
            got = dbscan(pts, eps, min_pts)
            want = naive_dbscan(pts, eps, min_pts)
            if not np.array_equal(got, want):
                record_criterion(3, "DBSCAN naive-oracle equivalence", False)
                raise AssertionError(f"trial {trial} diverged")
        record_criterion(3, "DBSCAN equals naive O(n^2) reference on 100 sets", True)


class TestCriterion4Knn:
    def test_exactness_vs_brute_force(self):
        rng = np.random.default_rng(3)
        for trial in range(100):
            n = int(rng.integers(150, 2000))
            cloud = PointCloud(positions=rng.random((n, 3)))
            index = KnnIndex(cloud)
            queries = rng.integers(0, n, size=4)
            for K in (1, 30, 120):
                for q in queries:
                    ids, dists = index.knn(int(q), K)
                    d = np.linalg.norm(cloud.positions - cloud.positions[q], axis=1)
                    mask = np.arange(n) != q
                    all_ids = np.arange(n)[mask]
                    order = np.lexsort((all_ids, d[mask]))
                    expect = all_ids[order][:K]
                    if not np.array_equal(ids, expect):
                        record_criterion(4, "k-NN exactness", False)
                        raise AssertionError(f"trial {trial} K={K} q={q}")
        record_criterion(4, "k-NN equals brute force on 100 clouds, K in {1,30,120}", True)


class TestCriterion5GeodesicOracle:
    def test_icosphere_logmap_accuracy(self):
        from dsemesh.geodesics import ReferenceSurface, analytic_logmap, gt_logmap

        surface = ReferenceSurface(icosphere(4))
        rng = np.random.default_rng(4)
        rad_errs, ang_errs = [], []
        pairs = 0
        while pairs < 500:
            c = int(rng.integers(len(surface.positions)))
            lm = gt_logmap(surface, c, 30)
            ana = np.array(
                [
                    analytic_logmap(
                        "sphere", {"radius": 1.0},
                        surface.positions[c], surface.positions[v],
                    )
                    for v in lm.neighbor_ids
                ]
            )
            ra = np.linalg.norm(ana, axis=1)
            rg = np.linalg.norm(lm.coords, axis=1)
            rad_errs.extend(np.abs(rg - ra) / np.maximum(ra, 1e-12))
            tg = np.arctan2(lm.coords[:, 1], lm.coords[:, 0])
            ta = np.arctan2(ana[:, 1], ana[:, 0])
            delta = tg - ta
            offset = np.arctan2(np.sin(delta).mean(), np.cos(delta).mean())
            ang_errs.extend(
                np.degrees(np.abs((delta - offset + np.pi) % (2 * np.pi) - np.pi))
            )
            pairs += len(lm.neighbor_ids)
        rad, ang = float(np.mean(rad_errs)), float(np.mean(ang_errs))
        ok = rad <= 0.05 and ang <= 10.0
        record_criterion(
            5, "geodesic oracle vs analytic sphere log map",
            ok, f"{pairs} pairs: radial {rad * 100:.2f}%, angular {ang:.2f} deg",
        )
        assert ok


class TestCriterion6PlaneEndToEnd:
    def test_plane_reconstruction(self):
        cloud = plane_fixture()
        start = time.perf_counter()
        mesh, report, diag = reconstruct(cloud, PipelineConfig(estimator="projection"))
        elapsed = time.perf_counter() - start

        adjacency = build_edge_adjacency(mesh)
        open_edges = {e for e, t in adjacency.incidence.items() if len(t) == 1}

        # interior triangles: none of their edges is open
        counts3 = 0
        interior = 0
        globs = mesh.global_triangles()
        for t in range(mesh.n_triangles):
            local = mesh.triangles[t]
            edges = [
                tuple(sorted((int(local[i]), int(local[(i + 1) % 3])))) for i in range(3)
            ]
            if any(e in open_edges for e in edges):
                continue
            interior += 1
            canon = tuple(sorted(int(v) for v in globs[t]))
            if diag.table.counts.get(canon, 0) == 3:
                counts3 += 1
        interior_fraction = counts3 / max(interior, 1)
        nw = report.nw_percent
        stddev = report.angle_stddev_deg
        ok = (
            nw <= 3.0
            and stddev <= 12.0
            and interior_fraction >= 0.95
            and elapsed < 60.0
        )
        detail = (
            f"NW {nw:.2f}%, A_sigma {stddev:.2f} deg, interior count3 "
            f"{interior_fraction:.3f}, {elapsed:.1f}s"
        )
        record_criterion(6, "plane end-to-end (40x40 lattice, projection)", ok, detail)
        assert ok, detail


class TestCriterion7SphereEndToEnd:
    def test_sphere_reconstruction(self):
        cloud = fibonacci_sphere_cloud(5000)
        start = time.perf_counter()
        mesh, report, diag = reconstruct(cloud, PipelineConfig(estimator="rotation"))
        elapsed = time.perf_counter() - start
        nw = report.nw_percent

        mean_spacing = float(np.sqrt(4.0 * np.pi / 5000))
        mesh_samples = sample_surface(mesh, 50_000, seed=0)
        ref_samples = sample_surface(icosphere(4), 50_000, seed=1)
        cd = chamfer(mesh_samples, ref_samples)

        radial = mesh.positions / np.linalg.norm(mesh.positions, axis=1, keepdims=True)
        nr = normal_error(mesh, radial)

        ok = nw <= 2.0 and cd <= 2.0 * mean_spacing and nr <= 10.0 and elapsed < 120.0
        detail = (
            f"NW {nw:.2f}%, CD {cd:.4f} (bound {2 * mean_spacing:.4f}), "
            f"NR {nr:.2f} deg, {elapsed:.1f}s"
        )
        record_criterion(7, "sphere end-to-end (5k sampling, rotation)", ok, detail)
        assert ok, detail


class TestCriterion8AblationDirection:
    @staticmethod
    def run_chain(cloud, estimator):
        nw = {}
        for tag, kw in (
            ("full", {}),
            ("no_align", {"align": False}),
            ("no_select", {"select": False}),
            ("neither", {"align": False, "select": False}),
        ):
            _, report, _ = reconstruct(
                cloud, PipelineConfig(estimator=estimator, **kw)
            )
            nw[tag] = report.nw_percent
        chain = nw["full"] <= nw["no_align"] <= nw["neither"]
        select_dir = nw["full"] <= nw["no_select"]
        return nw, chain and select_dir

    def test_sphere_and_cube(self):
        nw_s, ok_s = self.run_chain(SPHERE_FIXTURE, "rotation")
        cube = rounded_cube_cloud(**CUBE_FIXTURE_ARGS)
        nw_c, ok_c = self.run_chain(cube, "rotation")
        detail = (
            "sphere "
            + "/".join(f"{nw_s[t]:.2f}" for t in ("full", "no_align", "neither", "no_select"))
            + " cube "
            + "/".join(f"{nw_c[t]:.2f}" for t in ("full", "no_align", "neither", "no_select"))
        )
        ok = ok_s and ok_c
        record_criterion(8, "ablation direction NW(full)<=NW(no-align)<=NW(neither)", ok, detail)
        assert ok, detail


class TestCriterion9EdgeCap:
    def test_every_edge_at_most_two_triangles(self):
        failures = []

        def check(mesh, tag):
            adjacency = build_edge_adjacency(mesh)
            worst = max((len(t) for t in adjacency.incidence.values()), default=0)
            if worst > 2:
                failures.append(tag)

        mesh, _, _ = reconstruct(plane_fixture(), PipelineConfig())
        check(mesh, "plane")
        mesh, _, _ = reconstruct(SPHERE_FIXTURE, PipelineConfig(estimator="rotation"))
        check(mesh, "sphere")
        cube = rounded_cube_cloud(**CUBE_FIXTURE_ARGS)
        mesh, _, _ = reconstruct(cube, PipelineConfig(estimator="rotation"))
        check(mesh, "cube")
        rng = np.random.default_rng(9)
        for trial in range(20):
            n = int(rng.integers(120, 260))
            cloud = PointCloud(positions=rng.random((n, 3)))
            mesh, _, _ = reconstruct(cloud, PipelineConfig(K=40, k=12))
            check(mesh, f"random{trial}")
        ok = not failures
        record_criterion(
            9, "selection edge cap (<= 2 incident triangles) on all fixtures",
            ok, "violations: " + (", ".join(failures) if failures else "none"),
        )
        assert ok, failures


class TestCriterion10Determinism:
    def test_byte_identical_obj(self, tmp_path):
        from dsemesh.meshio import write_mesh

        cloud = fibonacci_sphere_cloud(600)
        cfg = PipelineConfig(K=60, k=20, estimator="rotation", seed=123)
        out = []
        for run in range(2):
            mesh, _, _ = reconstruct(cloud, cfg)
            path = tmp_path / f"run{run}.obj"
            write_mesh(path, mesh)
            out.append(path.read_bytes())
        ok = out[0] == out[1]
        record_criterion(10, "byte-identical OBJ across identical runs", ok)
        assert ok


class TestCriterion11MetricsUnits:
    def test_metric_unit_suite(self):
        from dsemesh.geometry import TriangleMesh

        def make_mesh(positions, triangles):
            positions = np.asarray(positions, dtype=float)
            return TriangleMesh(
                vertex_ids=np.arange(len(positions)),
                positions=positions,
                triangles=np.asarray(triangles),
            )

        checks = []
        rng = np.random.default_rng(11)
        a = PointCloud(positions=rng.random((100, 3)))
        b = PointCloud(positions=rng.random((120, 3)))
        checks.append(abs(chamfer(a, b) - chamfer(b, a)) < 1e-12)
        checks.append(chamfer(a, a) == 0.0)
        single = make_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
        checks.append(nonwatertight_ratio(single) == 100.0)
        equilateral = make_mesh(
            [[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0]], [[0, 1, 2]]
        )
        stddev, _ = angle_stats(equilateral)
        checks.append(abs(stddev) < 1e-9)
        pa = PointCloud(positions=np.array([[0.0, 0.0, 0.0]]))
        pb = PointCloud(positions=np.array([[1.0, 0.0, 0.0]]))
        checks.append(chamfer(pa, pb) == 2.0)
        ok = all(checks)
        record_criterion(11, "metrics unit suite", ok, f"{sum(checks)}/{len(checks)} checks")
        assert ok


needs_pretrained = pytest.mark.skipif(
    not (PRETRAINED / "classifier.dsewght").exists(),
    reason="pretrained weights not present; train them first (see README)",
)


@needs_pretrained
class TestCriterion12WeightRoundTrip:
    def test_primary_reproduces_trainer_forward(self):
        from dsemesh.formats import read_weights
        from dsemesh.network import _forward

        fixture = np.load(PRETRAINED / "reference_forward.npz")
        classifier = read_weights(PRETRAINED / "classifier.dsewght")
        projector = read_weights(PRETRAINED / "projector.dsewght")
        rows_c = fixture["classifier_rows"]
        rows_p = fixture["projector_rows"]
        worst = 0.0
        for i in range(len(rows_c)):
            out = _forward(rows_c[i], classifier)
            worst = max(worst, float(np.abs(out - fixture["classifier_out"][i]).max()))
        for i in range(len(rows_p)):
            out = _forward(rows_p[i], projector)
            worst = max(worst, float(np.abs(out - fixture["projector_out"][i]).max()))
        ok = worst <= 1e-6
        record_criterion(
            12, "trainer-exported weights reproduce trainer forwards",
            ok, f"max |diff| {worst:.2e} over {len(rows_c)} patches",
        )
        assert ok


@needs_pretrained
class TestCriterion13LearnedVsGeometric:
    def test_learned_projector_beats_projection_baseline(self):
        from dsemesh.formats import read_patch_dataset, read_weights
        from dsemesh.geodesics import GroundTruthLogMap
        from dsemesh.logmaps import estimate_neural, estimate_projection
        from dsemesh.metrics import logmap_mse
        from dsemesh.neighborhoods import GeodesicPatch

        projector = read_weights(PRETRAINED / "projector.dsewght")
        ds = read_patch_dataset(PRETRAINED / "holdout_curved.dsepatch")
        learned_mse, baseline_mse = [], []
        for rec in ds.records:
            members = np.flatnonzero(rec.member_flags)
            patch = GeodesicPatch(
                center_id=rec.center_id,
                member_ids=rec.candidate_ids[members],
                distances=rec.distances[members],
                rel_positions=rec.rel_positions[members],
            )
            gt = GroundTruthLogMap(
                center_id=rec.center_id,
                neighbor_ids=rec.candidate_ids[members],
                coords=rec.gt_coords,
                distances=np.linalg.norm(rec.gt_coords, axis=1),
            )
            g_learned, _ = logmap_mse(estimate_neural(patch, projector), gt)
            g_baseline, _ = logmap_mse(estimate_projection(patch), gt)
            learned_mse.append(g_learned)
            baseline_mse.append(g_baseline)
        learned = float(np.mean(learned_mse))
        baseline = float(np.mean(baseline_mse))
        ok_projector = learned < baseline

        from dsemesh.neighborhoods import select_geodesic_neural
        from dsemesh.neighborhoods import CandidatePatch

        classifier = read_weights(PRETRAINED / "classifier.dsewght")
        plane = read_patch_dataset(PRETRAINED / "holdout_plane.dsepatch")
        overlaps = []
        for rec in plane.records:
            cand = CandidatePatch(
                center_id=rec.center_id,
                candidate_ids=rec.candidate_ids,
                distances=rec.distances,
                rel_positions=rec.rel_positions,
            )
            sel = select_geodesic_neural(cand, classifier, plane.k)
            truth = set(rec.candidate_ids[np.flatnonzero(rec.member_flags)].tolist())
            overlaps.append(len(truth & set(sel.member_ids.tolist())) / plane.k)
        overlap = float(np.mean(overlaps))
        ok_classifier = overlap >= 0.90
        ok = ok_projector and ok_classifier
        record_criterion(
            13, "learned projector < projection baseline; classifier overlap >= 90%",
            ok,
            f"geodesic MSE {learned:.3e} vs {baseline:.3e}; overlap {overlap * 100:.1f}%",
        )
        assert ok


@needs_pretrained
class TestCriterion14NeuralEndToEnd:
    def test_neural_mode_non_regression(self):
        from dsemesh.formats import read_weights

        classifier = read_weights(PRETRAINED / "classifier.dsewght")
        projector = read_weights(PRETRAINED / "projector.dsewght")
        cloud = SPHERE_FIXTURE
        _, rep_rot, _ = reconstruct(cloud, PipelineConfig(estimator="rotation"))
        _, rep_neural, _ = reconstruct(
            cloud,
            PipelineConfig(estimator="neural", neighborhood="neural"),
            weights=(classifier, projector),
        )
        ok = rep_neural.nw_percent <= rep_rot.nw_percent + 1.0
        record_criterion(
            14, "neural end-to-end within 1pp of rotation estimator",
            ok, f"neural NW {rep_neural.nw_percent:.2f}% vs rotation {rep_rot.nw_percent:.2f}%",
        )
        assert ok
