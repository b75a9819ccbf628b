"""Compiled inner loops: Aberth–Ehrlich root finding, polyline membership and
the per-pixel orbit loop used by the renderers.  Everything here is plain
numba so it releases the GIL and can run on worker threads."""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def horner(c, z):
    """Value of the polynomial with coefficients c (highest degree first)."""
    p = c[0]
    for k in range(1, len(c)):
        p = p * z + c[k]
    return p


@njit(cache=True, nogil=True)
def initial_roots(c, out):
    """Perturbed circle about the centroid with a Fujiwara-type radius."""
    n = len(c) - 1
    lead = c[0]
    center = -c[1] / (n * lead)
    rad = 0.0
    for k in range(1, n + 1):
        r = abs(c[k] / lead) ** (1.0 / k)
        if r > rad:
            rad = r
    rad = 2.0 * rad + 1e-3
    for k in range(n):
        ang = 2.0 * math.pi * k / n + 0.4
        out[k] = center + rad * complex(math.cos(ang), math.sin(ang))


@njit(cache=True, nogil=True)
def aberth(c, z, max_iter, tol):
    """Refine all roots of c in place; returns the iteration count used.

    A root stops moving once |p(z)| is below the rounding bound of its
    Horner evaluation, so clusters around multiple roots do not drift.
    """
    n = len(z)
    if n == 1:
        z[0] = -c[1] / c[0]
        return 0
    eps = 2.220446049250313e-16
    frozen = np.zeros(n, dtype=np.bool_)
    for it in range(max_iter):
        done = True
        for i in range(n):
            if frozen[i]:
                continue
            zi = z[i]
            p = c[0]
            dp = 0j
            bound = abs(c[0])
            r = abs(zi)
            for k in range(1, n + 1):
                dp = dp * zi + p
                p = p * zi + c[k]
                bound = bound * r + abs(c[k])
            if abs(p) <= 8 * eps * bound:
                frozen[i] = True
                continue
            s = 0j
            for j in range(n):
                if j != i:
                    diff = zi - z[j]
                    if diff != 0:
                        s += 1.0 / diff
            if dp == 0:
                # stationary point of p: nudge off it
                w = complex(1e-8, 1e-8) * (1.0 + abs(zi))
            else:
                ratio = p / dp
                den = 1.0 - ratio * s
                w = ratio / den if den != 0 else ratio
            z[i] = zi - w
            if abs(w) > tol * (1.0 + abs(z[i])):
                done = False
        if done:
            return it + 1
    return max_iter


@njit(cache=True, nogil=True)
def solve(c, max_iter, tol):
    n = len(c) - 1
    z = np.empty(n, dtype=np.complex128)
    if n == 0:
        return z
    initial_roots(c, z)
    aberth(c, z, max_iter, tol)
    return z


@njit(cache=True, nogil=True)
def deflate(c, z):
    """(f(w) - f(z)) / (w - z) by synthetic division, coefficients highest first."""
    n = len(c) - 1
    out = np.empty(n, dtype=np.complex128)
    acc = c[0]
    out[0] = acc
    for k in range(1, n):
        acc = acc * z + c[k]
        out[k] = acc
    return out


# --- membership in a polygon ---


@njit(cache=True, nogil=True)
def seg_dist(z, a, b):
    ab = b - a
    den = ab.real * ab.real + ab.imag * ab.imag
    if den == 0:
        return abs(z - a)
    t = ((z - a) * ab.conjugate()).real / den
    if t < 0:
        t = 0.0
    elif t > 1:
        t = 1.0
    return abs(z - (a + t * ab))


@njit(cache=True, nogil=True)
def side_general(poly, z, band):
    """+1 inside, -1 outside, 0 within ``band`` of the closed polyline (winding rule)."""
    n = len(poly)
    wn = 0
    for k in range(n):
        a = poly[k]
        b = poly[(k + 1) % n]
        if seg_dist(z, a, b) <= band:
            return 0
        if a.imag <= z.imag:
            if b.imag > z.imag:
                if ((b - a).real * (z - a).imag - (z - a).real * (b - a).imag) > 0:
                    wn += 1
        elif b.imag <= z.imag:
            if ((b - a).real * (z - a).imag - (z - a).real * (b - a).imag) < 0:
                wn -= 1
    return 1 if wn != 0 else -1


@njit(cache=True, nogil=True)
def side_star(poly, angles, z, band):
    """Same as side_general for a polygon star-shaped about 0 whose vertex
    angles increase strictly through one turn (angles[0] in (-pi, pi])."""
    n = len(poly)
    ang = math.atan2(z.imag, z.real)
    if ang < angles[0]:
        ang += 2 * math.pi
    lo, hi = 0, n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if angles[mid] <= ang:
            lo = mid
        else:
            hi = mid
    k = lo
    for off in range(-2, 3):
        j = (k + off) % n
        if seg_dist(z, poly[j], poly[(j + 1) % n]) <= band:
            return 0
    a = poly[k]
    b = poly[(k + 1) % n]
    cross = (b - a).real * (z - a).imag - (z - a).real * (b - a).imag
    return 1 if cross > 0 else -1


@njit(cache=True, nogil=True)
def side_of(poly, angles, star, z, band):
    if star:
        return side_star(poly, angles, z, band)
    return side_general(poly, z, band)


# --- orbit loop for the B-involution ---

UNDECIDED = -2
NONESCAPING = -1


@njit(cache=True, nogil=True)
def _pick_inside(roots, poly, angles, star, band):
    """Index of the unique root in the closed disc, -1 if none, -2 if ambiguous."""
    found = -1
    for k in range(len(roots)):
        s = side_of(poly, angles, star, roots[k], band)
        if s == 0:
            return -2
        if s > 0:
            if found >= 0:
                return -2
            found = k
    return found


@njit(cache=True, nogil=True)
def rank_from_disc_point(q, x, max_rank, poly, angles, star, band, pinch_q, pinch_tol):
    """Tile rank of Q(x) for x already known to lie inside the disc.

    Iterates x -> the root inside the disc of Q(w) = Q(1/x) other than 1/x.
    Returns k >= 1 on first exit, NONESCAPING, or UNDECIDED.
    """
    for k in range(1, max_rank + 1):
        if x == 0:
            return UNDECIDED
        jx = 1.0 / x
        u = horner(q, jx)
        for p in pinch_q:
            if abs(u - p) < pinch_tol:
                return UNDECIDED
        roots = solve(deflate(q, jx), 200, 1e-15)
        idx = _pick_inside(roots, poly, angles, star, band)
        if idx == -2:
            return UNDECIDED
        if idx == -1:
            return k
        x = roots[idx]
    return NONESCAPING


@njit(cache=True, nogil=True)
def rank_of_value(q, u, max_rank, poly, angles, star, band, pinch_q, pinch_tol):
    """Tile rank of a point u of the dynamical plane."""
    for p in pinch_q:
        if abs(u - p) < pinch_tol:
            return UNDECIDED
    c = q.copy()
    c[len(c) - 1] -= u
    roots = solve(c, 200, 1e-15)
    idx = _pick_inside(roots, poly, angles, star, band)
    if idx == -2:
        return UNDECIDED
    if idx == -1:
        return 0
    if max_rank == 0:
        return NONESCAPING
    return rank_from_disc_point(q, roots[idx], max_rank, poly, angles, star, band, pinch_q, pinch_tol)


KPLUS = -3
KMINUS = -4


@njit(cache=True, nogil=True)
def corr_code(q, z, max_rank, poly, angles, star, band, pinch_q, pinch_tol):
    """Verdict for a point of the correspondence plane.

    Points inside the disc get one extra step of budget so that the
    truncated verdicts are exactly symmetric under z -> 1/z.
    """
    s = side_of(poly, angles, star, z, band)
    if s == 0:
        return UNDECIDED
    u = horner(q, z)
    for p in pinch_q:
        if abs(u - p) < pinch_tol:
            return UNDECIDED
    if s > 0:
        r = rank_from_disc_point(q, z, max_rank + 1, poly, angles, star, band, pinch_q, pinch_tol)
        if r == NONESCAPING:
            return KPLUS
        return r
    roots = solve(deflate(q, z), 200, 1e-15)
    idx = _pick_inside(roots, poly, angles, star, band)
    if idx == -2:
        return UNDECIDED
    if idx == -1:
        return 0
    r = rank_from_disc_point(q, roots[idx], max_rank, poly, angles, star, band, pinch_q, pinch_tol)
    if r == NONESCAPING:
        return KMINUS
    return r


@njit(cache=True, nogil=True)
def s_plane_block(q, pts, max_rank, poly, angles, star, band, pinch_q, pinch_tol, out):
    for i in range(len(pts)):
        out[i] = rank_of_value(q, pts[i], max_rank, poly, angles, star, band, pinch_q, pinch_tol)


@njit(cache=True, nogil=True)
def corr_plane_block(q, pts, max_rank, poly, angles, star, band, pinch_q, pinch_tol, out):
    for i in range(len(pts)):
        out[i] = corr_code(q, pts[i], max_rank, poly, angles, star, band, pinch_q, pinch_tol)


@njit(cache=True, nogil=True)
def side_block(poly, angles, star, pts, band, out):
    for i in range(len(pts)):
        out[i] = side_of(poly, angles, star, pts[i], band)


@njit(cache=True, nogil=True)
def _orient(a, b, c):
    return (b - a).real * (c - a).imag - (c - a).real * (b - a).imag


@njit(cache=True, nogil=True)
def first_crossing(poly):
    """First pair (i, j) of non-adjacent edges of the closed polyline that
    intersect, or (-1, -1) when the polyline is simple."""
    n = len(poly)
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        xmin = min(a.real, b.real)
        xmax = max(a.real, b.real)
        ymin = min(a.imag, b.imag)
        ymax = max(a.imag, b.imag)
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            c = poly[j]
            e = poly[(j + 1) % n]
            if max(c.real, e.real) < xmin or min(c.real, e.real) > xmax:
                continue
            if max(c.imag, e.imag) < ymin or min(c.imag, e.imag) > ymax:
                continue
            d1 = _orient(a, b, c)
            d2 = _orient(a, b, e)
            d3 = _orient(c, e, a)
            d4 = _orient(c, e, b)
            if d1 * d2 <= 0 and d3 * d4 <= 0:
                return i, j
    return -1, -1


@njit(cache=True, nogil=True)
def max_polyline_distance(pts, poly):
    """max over pts of the distance to the closed polyline."""
    n = len(poly)
    worst = 0.0
    for i in range(len(pts)):
        best = math.inf
        for k in range(n):
            d = seg_dist(pts[i], poly[k], poly[(k + 1) % n])
            if d < best:
                best = d
        if best > worst:
            worst = best
    return worst
