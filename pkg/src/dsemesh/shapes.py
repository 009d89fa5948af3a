"""Analytic shape generators used for fixtures, oracles, and training data.

All generators are deterministic. Meshes come out consistently oriented
(outward normals for closed shapes, +z for the planar ones).
"""

from __future__ import annotations

import numpy as np

from .geometry import PointCloud, TriangleMesh


def square_grid_mesh(nx: int, ny: int, spacing: float = 1.0) -> TriangleMesh:
    """Planar grid of nx * ny points at z=0, each cell split along one diagonal."""
    xs, ys = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    pos = np.stack([xs.ravel() * spacing, ys.ravel() * spacing, np.zeros(nx * ny)], axis=1)
    tris = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a = i * ny + j
            b = (i + 1) * ny + j
            c = (i + 1) * ny + j + 1
            d = i * ny + j + 1
            tris.append((a, b, c))
            tris.append((a, c, d))
    return TriangleMesh(
        vertex_ids=np.arange(nx * ny, dtype=np.int64),
        positions=pos,
        triangles=np.array(tris, dtype=np.int64),
    )


def _triangular_lattice(cols: int, rows: int, spacing: float) -> np.ndarray:
    pts = []
    for j in range(rows):
        y = j * spacing * np.sqrt(3.0) / 2.0
        xoff = 0.5 * spacing * (j % 2)
        for i in range(cols):
            pts.append((i * spacing + xoff, y, 0.0))
    return np.asarray(pts)


def lattice_disk_cloud(radius_in_spacings: float, spacing: float = 1.0) -> PointCloud:
    """Equilateral-lattice points at z=0 trimmed to a disk around the lattice center."""
    extent = int(np.ceil(radius_in_spacings)) * 2 + 3
    pts = _triangular_lattice(extent, extent, spacing)
    center = pts.mean(axis=0)
    center[2] = 0.0
    keep = np.linalg.norm(pts - center, axis=1) <= radius_in_spacings * spacing
    pts = pts[keep] - center
    return PointCloud(positions=pts, normals=np.tile([0.0, 0.0, 1.0], (keep.sum(), 1)))


def lattice_disk_mesh(radius_in_spacings: float, spacing: float = 1.0) -> TriangleMesh:
    """Delaunay mesh of the lattice disk (reference surface for oracles)."""
    from .delaunay import delaunay2d

    cloud = lattice_disk_cloud(radius_in_spacings, spacing)
    tri = delaunay2d(cloud.positions[:, :2])
    return TriangleMesh(
        vertex_ids=np.arange(len(cloud), dtype=np.int64),
        positions=cloud.positions,
        triangles=tri.triangles,
    )


def icosphere(level: int, radius: float = 1.0) -> TriangleMesh:
    """Subdivided icosahedron projected onto the sphere; level 0 is the icosahedron."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array(
        [
            (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
            (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
            (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
            (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
        ],
        dtype=np.int64,
    )
    vlist = [tuple(v) for v in verts]
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(u, v):
            key = (u, v) if u < v else (v, u)
            if key not in cache:
                m = np.asarray(vlist[u]) + np.asarray(vlist[v])
                m /= np.linalg.norm(m)
                cache[key] = len(vlist)
                vlist.append(tuple(m))
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = np.array(new_faces, dtype=np.int64)
    pos = np.asarray(vlist) * radius
    return TriangleMesh(
        vertex_ids=np.arange(len(pos), dtype=np.int64), positions=pos, triangles=faces
    )


def cylinder_mesh(radius: float, height: float, n_around: int, n_axial: int) -> TriangleMesh:
    """Closed cylinder: lateral grid plus fan caps, outward-oriented."""
    pos = []
    tris = []
    for j in range(n_axial):
        z = height * j / (n_axial - 1)
        for i in range(n_around):
            theta = 2.0 * np.pi * i / n_around
            pos.append((radius * np.cos(theta), radius * np.sin(theta), z))
    for j in range(n_axial - 1):
        for i in range(n_around):
            a = j * n_around + i
            b = j * n_around + (i + 1) % n_around
            c = (j + 1) * n_around + (i + 1) % n_around
            d = (j + 1) * n_around + i
            tris.append((a, b, c))
            tris.append((a, c, d))
    bottom = len(pos)
    pos.append((0.0, 0.0, 0.0))
    top = len(pos)
    pos.append((0.0, 0.0, height))
    for i in range(n_around):
        nxt = (i + 1) % n_around
        tris.append((bottom, nxt, i))
        base = (n_axial - 1) * n_around
        tris.append((top, base + i, base + nxt))
    pos = np.asarray(pos)
    return TriangleMesh(
        vertex_ids=np.arange(len(pos), dtype=np.int64),
        positions=pos,
        triangles=np.array(tris, dtype=np.int64),
    )


def torus_mesh(major: float, minor: float, n_major: int, n_minor: int) -> TriangleMesh:
    """Closed torus grid, outward-oriented."""
    pos = []
    for i in range(n_major):
        u = 2.0 * np.pi * i / n_major
        for j in range(n_minor):
            v = 2.0 * np.pi * j / n_minor
            r = major + minor * np.cos(v)
            pos.append((r * np.cos(u), r * np.sin(u), minor * np.sin(v)))
    tris = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = ((i + 1) % n_major) * n_minor + j
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = i * n_minor + (j + 1) % n_minor
            tris.append((a, b, c))
            tris.append((a, c, d))
    pos = np.asarray(pos)
    return TriangleMesh(
        vertex_ids=np.arange(len(pos), dtype=np.int64),
        positions=pos,
        triangles=np.array(tris, dtype=np.int64),
    )


def rounded_cube_cloud(
    n: int,
    half_extent: float = 1.0,
    fillet: float = 0.3,
    seed: int = 0,
    jitter: float = 0.0,
) -> PointCloud:
    """Near-uniform samples of a cube with filleted edges and corners.

    The surface splits into 6 flat face squares, 12 quarter-cylinder edge
    fillets, and 8 eighth-sphere corners. Each part carries a grid of cell
    centers at a common spacing derived from n, so the sampling is
    deterministic and evenly spaced; jitter > 0 adds a seeded perturbation
    of that fraction of the spacing.
    """
    h, r = half_extent, fillet
    area = 24.0 * h * h + 12.0 * (0.5 * np.pi * r) * (2.0 * h) + 4.0 * np.pi * r * r
    spacing = float(np.sqrt(area / max(n, 1)))
    pts: list[np.ndarray] = []
    nrms: list[np.ndarray] = []
    axes = np.eye(3)

    def centers(length, s):
        m = max(int(round(length / s)), 1)
        return (np.arange(m) + 0.5) / m * length - length / 2.0

    # flat faces at distance h + r
    for axis in range(3):
        rest = [a for a in range(3) if a != axis]
        grid = centers(2.0 * h, spacing)
        for sign in (1.0, -1.0):
            for u in grid:
                for v in grid:
                    p = np.zeros(3)
                    p[axis] = sign * (h + r)
                    p[rest[0]], p[rest[1]] = u, v
                    pts.append(p)
                    nrms.append(sign * axes[axis])

    # quarter-cylinder edge fillets
    arc = 0.5 * np.pi * r
    for axis in range(3):
        rest = [a for a in range(3) if a != axis]
        t_grid = centers(2.0 * h, spacing)
        phi_grid = (np.arange(max(int(round(arc / spacing)), 1)) + 0.5) / max(
            int(round(arc / spacing)), 1
        ) * (np.pi / 2.0)
        for s1 in (1.0, -1.0):
            for s2 in (1.0, -1.0):
                for t in t_grid:
                    for phi in phi_grid:
                        d = np.zeros(3)
                        d[rest[0]] = s1 * np.cos(phi)
                        d[rest[1]] = s2 * np.sin(phi)
                        p = np.zeros(3)
                        p[axis] = t
                        p[rest[0]] = s1 * h
                        p[rest[1]] = s2 * h
                        pts.append(p + r * d)
                        nrms.append(d)

    # eighth-sphere corners: barycentric grid on the octant triangle
    corner_target = (0.5 * np.pi * r * r) / (spacing * spacing)
    level = max(int(round(np.sqrt(2.0 * corner_target) + 1.0)), 2)
    octant_dirs = []
    for i in range(1, level):
        for j in range(1, level - i):
            k = level - i - j
            d = i * axes[0] + j * axes[1] + k * axes[2]
            octant_dirs.append(d / np.linalg.norm(d))
    for sx in (1.0, -1.0):
        for sy in (1.0, -1.0):
            for sz in (1.0, -1.0):
                corner = np.array([sx, sy, sz])
                for d in octant_dirs:
                    dd = corner * d
                    pts.append(corner * h + r * dd)
                    nrms.append(dd)

    positions = np.asarray(pts)
    normals = np.asarray(nrms)
    if jitter > 0.0:
        rng = np.random.default_rng(seed)
        tangent_noise = rng.normal(scale=jitter * spacing, size=positions.shape)
        tangent_noise -= (tangent_noise * normals).sum(axis=1, keepdims=True) * normals
        positions = positions + tangent_noise
    return PointCloud(positions=positions, normals=normals)


def sphere_cloud(n: int, radius: float = 1.0, seed: int = 0) -> PointCloud:
    """Uniform random samples on a sphere, with outward normals."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return PointCloud(positions=radius * v, normals=v)


def fibonacci_sphere_cloud(n: int, radius: float = 1.0) -> PointCloud:
    """Deterministic near-uniform sphere sampling (golden-angle spiral)."""
    i = np.arange(n)
    golden = np.pi * (3.0 - np.sqrt(5.0))
    y = 1.0 - 2.0 * (i + 0.5) / n
    r = np.sqrt(np.maximum(1.0 - y * y, 0.0))
    theta = golden * i
    d = np.stack([r * np.cos(theta), y, r * np.sin(theta)], axis=1)
    return PointCloud(positions=radius * d, normals=d)
