"""Exact 2D orientation and in-circle predicates with floating-point filters.

The fast path evaluates each determinant in double precision and accepts the
sign whenever its magnitude exceeds a forward error bound (the classic
Shewchuk "A" bounds). Ambiguous cases fall back to exact integer arithmetic:
every double is a dyadic rational, so after rescaling all coordinates to a
common power-of-two denominator the determinants are plain (big) integer
expressions.

Exactly co-circular quadruples are resolved by a symbolic perturbation that
lowers the lifted paraboloid height of each point by an infinitesimal that
shrinks with the point's key, so the point with the smallest key dominates.
For four concyclic points the first-order term never vanishes (no three
points of a circle are collinear), which makes the rule total. Keys shared
across overlapping point subsets therefore produce mutually consistent
triangulations.
"""

from __future__ import annotations

import numpy as np

_EPS = np.finfo(np.float64).eps / 2.0  # 2^-53
CCW_ERR_BOUND = (3.0 + 16.0 * _EPS) * _EPS
INCIRCLE_ERR_BOUND = (10.0 + 96.0 * _EPS) * _EPS


def _to_scaled_ints(values):
    """Map a list of finite doubles to integers sharing one power-of-two scale."""
    ratios = [float(v).as_integer_ratio() for v in values]
    # denominators of doubles are powers of two
    shifts = [d.bit_length() - 1 for _, d in ratios]
    top = max(shifts)
    return [n << (top - s) for (n, _), s in zip(ratios, shifts)]


def _sign(x) -> int:
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


def _orient2d_exact(ax, ay, bx, by, cx, cy) -> int:
    iax, iay, ibx, iby, icx, icy = _to_scaled_ints([ax, ay, bx, by, cx, cy])
    det = (iax - icx) * (iby - icy) - (iay - icy) * (ibx - icx)
    return _sign(det)


def orient2d(a, b, c) -> int:
    """Sign of the signed area of triangle (a, b, c): +1 CCW, -1 CW, 0 collinear."""
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    cx, cy = float(c[0]), float(c[1])
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    errbound = CCW_ERR_BOUND * (abs(detleft) + abs(detright))
    if det > errbound or -det > errbound:
        return 1 if det > 0 else -1
    return _orient2d_exact(ax, ay, bx, by, cx, cy)


def _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy) -> int:
    iax, iay, ibx, iby, icx, icy, idx, idy = _to_scaled_ints(
        [ax, ay, bx, by, cx, cy, dx, dy]
    )
    adx, ady = iax - idx, iay - idy
    bdx, bdy = ibx - idx, iby - idy
    cdx, cdy = icx - idx, icy - idy
    al = adx * adx + ady * ady
    bl = bdx * bdx + bdy * bdy
    cl = cdx * cdx + cdy * cdy
    det = (
        adx * (bdy * cl - cdy * bl)
        - ady * (bdx * cl - cdx * bl)
        + al * (bdx * cdy - cdx * bdy)
    )
    return _sign(det)


def incircle(a, b, c, d) -> int:
    """Sign of the in-circle determinant for CCW triangle (a, b, c) and query d.

    +1 means d lies strictly inside the circumcircle, -1 strictly outside,
    0 exactly on it.
    """
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    cx, cy = float(c[0]), float(c[1])
    dx, dy = float(d[0]), float(d[1])
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    al = adx * adx + ady * ady
    bl = bdx * bdx + bdy * bdy
    cl = cdx * cdx + cdy * cdy
    det = (
        adx * (bdy * cl - cdy * bl)
        - ady * (bdx * cl - cdx * bl)
        + al * (bdx * cdy - cdx * bdy)
    )
    permanent = (
        (abs(bdx * cdy) + abs(cdx * bdy)) * al
        + (abs(cdx * ady) + abs(adx * cdy)) * bl
        + (abs(adx * bdy) + abs(bdx * ady)) * cl
    )
    errbound = INCIRCLE_ERR_BOUND * permanent
    if det > errbound or -det > errbound:
        return 1 if det > 0 else -1
    return _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy)


def incircle_perturbed(a, b, c, d, key_a: int, key_b: int, key_c: int, key_d: int) -> int:
    """In-circle test that never returns 0 for four distinct points.

    Exact ties are broken as if every point's lifted height were lowered by
    an infinitesimal decreasing in its key; the smallest key dominates. The
    result is antisymmetric under row swaps exactly like the unperturbed
    determinant, so calls over overlapping quadruples stay consistent as
    long as keys are stable.
    """
    s = incircle(a, b, c, d)
    if s != 0:
        return s
    rows = [(key_a, 0, a), (key_b, 1, b), (key_c, 2, c), (key_d, 3, d)]
    rows.sort(key=lambda r: r[0])
    pts = (a, b, c, d)
    for _, row_index, _ in rows:
        rest = [pts[i] for i in range(4) if i != row_index]
        minor = _orient2d_exact(
            float(rest[0][0]), float(rest[0][1]),
            float(rest[1][0]), float(rest[1][1]),
            float(rest[2][0]), float(rest[2][1]),
        )
        if minor != 0:
            # cofactor of the lifted column in 1-indexed row r is
            # (-1)^(r+3) * minor; the perturbation enters as -eps * cofactor
            # and the smallest key's term dominates
            cofactor_sign = 1 if row_index in (0, 2) else -1
            return -cofactor_sign * minor
    raise ArithmeticError("degenerate quadruple: perturbation did not resolve")


def incircle_filter_batch(apts, bpts, cpts, d):
    """Vectorized in-circle filter for many triangles against one query point.

    Returns (signs, ambiguous): signs in {-1, 0, +1} are certified wherever
    ambiguous is False; entries flagged ambiguous must be re-tested exactly.
    """
    dx, dy = float(d[0]), float(d[1])
    adx = apts[:, 0] - dx
    ady = apts[:, 1] - dy
    bdx = bpts[:, 0] - dx
    bdy = bpts[:, 1] - dy
    cdx = cpts[:, 0] - dx
    cdy = cpts[:, 1] - dy
    al = adx * adx + ady * ady
    bl = bdx * bdx + bdy * bdy
    cl = cdx * cdx + cdy * cdy
    det = (
        adx * (bdy * cl - cdy * bl)
        - ady * (bdx * cl - cdx * bl)
        + al * (bdx * cdy - cdx * bdy)
    )
    permanent = (
        (np.abs(bdx * cdy) + np.abs(cdx * bdy)) * al
        + (np.abs(cdx * ady) + np.abs(adx * cdy)) * bl
        + (np.abs(adx * bdy) + np.abs(bdx * ady)) * cl
    )
    errbound = INCIRCLE_ERR_BOUND * permanent
    ambiguous = np.abs(det) <= errbound
    return np.sign(det).astype(np.int64), ambiguous
