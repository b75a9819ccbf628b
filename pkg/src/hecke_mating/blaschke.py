"""Parabolic Blaschke products B_d(z) = (z^d + c) / (1 + c z^d), c = (d-1)/(d+1).

B_d fixes 1 with multiplier 1 and vanishing second derivative, so near 1

    B_d(1 + y) = y + 1 + a3 y^3 + a4 y^4 + ...,  a3 < 0,

with one attracting direction (into the disc) and two repelling ones along
the circle.  Fatou coordinates are computed from the asymptotic expansion

    phi(y) = A / y^2 + B / y + C log y + sum_k e_k y^k

solved order by order, pushed to a point deep in the petal by iteration.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import series
from .complex_geom import segment_distance, winding_number


class PetalError(RuntimeError):
    pass


class PetalEscapeError(PetalError):
    """Orbit did not settle in the petal within the iteration budget."""


class TracingError(RuntimeError):
    pass


@dataclass(frozen=True)
class BlaschkeMap:
    d: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError("d must be an integer >= 2")

    @property
    def c(self) -> float:
        return (self.d - 1) / (self.d + 1)

    def __call__(self, z):
        zd = z**self.d
        return (zd + self.c) / (1 + self.c * zd)

    def derivative(self, z):
        c, d = self.c, self.d
        den = 1 + c * z**d
        return d * z ** (d - 1) * (1 - c * c) / (den * den)

    def preimage_power(self, t):
        """w^d for any w with B(w) = t."""
        return (t - self.c) / (1 - self.c * t)

    def principal_preimage(self, t):
        """The preimage with argument in (-pi/d, pi/d]; the branch fixing 1."""
        return self.preimage_power(t) ** (1 / self.d)

    def preimages(self, t: complex) -> np.ndarray:
        w0 = complex(self.principal_preimage(complex(t)))
        return w0 * np.exp(2j * math.pi * np.arange(self.d) / self.d)

    def taylor_at_one(self, order: int = 16) -> np.ndarray:
        """Coefficients of y -> B(1 + y) - 1, lowest order first."""
        n = order + 1
        s = np.array([math.comb(self.d, k) for k in range(min(self.d, order) + 1)], dtype=complex)
        s = series.pad(s, n)
        num = s.copy()
        num[0] += self.c
        den = self.c * s
        den[0] += 1
        out = series.mul(num, series.reciprocal(den, n), n)
        out[0] -= 1
        return out


def blaschke_apply(B: BlaschkeMap, z):
    return B(z)


# --- asymptotic Fatou coordinates ---


@dataclass
class AsymptoticFatou:
    """Truncated expansion of a Fatou coordinate for y -> y + a3 y^3 + ..., a3 != 0,
    solving phi(f(y)) = phi(y) + 1 up to O(y^(K+3)).

    ``axis`` is the direction of the petal; logarithms are taken as
    log(y / axis) so the cut points away from it.
    """

    germ: np.ndarray
    axis: complex
    n_terms: int = 6
    coeffs: dict = field(init=False)

    def __post_init__(self):
        K = self.n_terms
        n = K + 5
        f = series.pad(self.germ, n + 2)
        if abs(f[1] - 1) > 1e-12 or abs(f[2]) > 1e-12 or abs(f[3]) == 0:
            raise ValueError("germ must be y + a3 y^3 + ... with a3 != 0")
        h = f[1:]  # f(y) / y = 1 + h(y)
        h[0] = 0
        one_h = h.copy()
        one_h[0] = 1
        m = K + 3  # equations for y^0 .. y^(K+2)
        cols = []
        # A/y^2: y^-2 ((1+h)^-2 - 1), shift by -2
        p2 = series.power(one_h, -2, m + 2)
        p2[0] -= 1
        cols.append(p2[2 : m + 2])
        # B/y: y^-1 ((1+h)^-1 - 1)
        p1 = series.power(one_h, -1, m + 1)
        p1[0] -= 1
        cols.append(p1[1 : m + 1])
        # C log y: log(1+h)
        cols.append(series.log1p(h, m))
        for k in range(1, K + 1):
            pk = series.power(one_h, k, m)
            pk[0] -= 1
            cols.append(np.concatenate([np.zeros(k, complex), pk])[:m])
        mat = np.array(cols).T
        rhs = np.zeros(m, dtype=complex)
        rhs[0] = 1
        sol = np.linalg.solve(mat, rhs)
        self.coeffs = {"A": sol[0], "B": sol[1], "C": sol[2], "e": sol[3:]}

    def __call__(self, y):
        c = self.coeffs
        out = c["A"] / y**2 + c["B"] / y + c["C"] * np.log(y / self.axis)
        return out + _poly_tail(c["e"], y)

    def derivative(self, y):
        c = self.coeffs
        out = -2 * c["A"] / y**3 - c["B"] / y**2 + c["C"] / y
        e = c["e"]
        for k in range(len(e), 0, -1):
            out = out + k * e[k - 1] * y ** (k - 1)
        return out

    def invert(self, w, iters: int = 60):
        """Small y in the petal with phi(y) = w (w of large modulus)."""
        w = np.asarray(w, dtype=complex)
        y = np.sqrt(self.coeffs["A"] / w)
        y = np.where((y / self.axis).real > 0, y, -y)
        for _ in range(iters):
            step = (self(y) - w) / self.derivative(y)
            y = y - step
            if np.all(np.abs(step) <= 1e-16 * np.abs(y)):
                break
        return y


def _poly_tail(e, y):
    out = np.zeros_like(np.asarray(y, dtype=complex))
    for k in range(len(e), 0, -1):
        out = (out + e[k - 1]) * y
    return out


def attracting_expansion(B: BlaschkeMap, n_terms: int = 6) -> AsymptoticFatou:
    return AsymptoticFatou(B.taylor_at_one(n_terms + 8), axis=-1, n_terms=n_terms)


def repelling_expansion(B: BlaschkeMap, side: int, n_terms: int = 6) -> AsymptoticFatou:
    """Expansion for the local inverse of B fixing 1, whose petals are the repelling ones of B."""
    n = n_terms + 9
    g = series.revert(B.taylor_at_one(n - 1), n)
    return AsymptoticFatou(g, axis=1j if side > 0 else -1j, n_terms=n_terms)


def fatou_attracting(B: BlaschkeMap, z, N: int = 1000, expansion: AsymptoticFatou | None = None):
    """Attracting Fatou coordinate phi(B^N z) - N, normalized by the expansion."""
    exp = expansion or attracting_expansion(B)
    w = np.asarray(z, dtype=complex).copy()
    for _ in range(N):
        w = B(w)
    y = w - 1
    ok = (np.abs(y) < 0.25) & (np.abs(np.angle(y / exp.axis)) < math.pi / 3)
    if not np.all(ok):
        raise PetalEscapeError("orbit has not settled in the attracting petal")
    out = exp(y) - N
    return complex(out) if out.ndim == 0 else out


# --- petals ---


class Petal:
    """Attracting petal: the pullback of a sector in the Fatou plane.

    P0 is the set of y = z - 1 near the attracting direction whose
    asymptotic Fatou value lies in {|arg(w - R0)| < theta0 / 2}.  The petal is
    the component of B^-n(P0) containing P0, where n is the first time the
    critical value enters P0.  Along the pullback the principal branch of
    B^-1 is used, so z is in the petal iff B^k(z) keeps |arg| < pi/d for
    k < n and B^n(z) lies in P0.
    """

    def __init__(self, B: BlaschkeMap, theta0: float = math.pi / 2, radius: float = 0.1, max_pullbacks: int = 10000):
        if not 0 < theta0 < math.pi:
            raise ValueError("theta0 must lie in (0, pi)")
        self.B = B
        self.theta0 = theta0
        self.expansion = attracting_expansion(B)
        self.R0 = abs(self.expansion.coeffs["A"]) / radius**2
        self.radius = radius
        t = complex(B.c)
        for n in range(max_pullbacks + 1):
            if self._in_base(np.array([t]))[0]:
                break
            t = B(t)
        else:
            raise PetalError("critical value never enters the base petal")
        self.n_pullbacks = n
        if self.contains(0j) and n > 0:
            raise PetalError("petal contains the critical point")
        if not self.contains(complex(B.c)):
            raise PetalError("petal misses the critical value")

    @property
    def fatou_threshold(self) -> float:
        return self.R0

    def _in_base(self, z: np.ndarray) -> np.ndarray:
        y = z - 1
        out = (np.abs(y) < 2 * self.radius) & ((y / self.expansion.axis).real > 0)
        with np.errstate(all="ignore"):
            w = np.where(out, self.expansion(np.where(out, y, -0.01)), 0)
        return out & (np.abs(np.angle(w - self.R0)) < self.theta0 / 2)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        w = z.ravel().copy()
        ok = np.abs(w) < 1
        lim = math.pi / self.B.d
        for _ in range(self.n_pullbacks):
            ok &= np.abs(np.angle(w)) < lim
            w = self.B(w)
        ok &= self._in_base(w)
        ok = ok.reshape(z.shape)
        return bool(ok) if ok.ndim == 0 else ok

    def base_boundary(self, n: int = 400) -> np.ndarray:
        """Boundary of P0, from 1 along the upper ray to the vertex and back along the lower ray."""
        r = np.concatenate([[0.0], np.logspace(-3, 10, n)])
        half = self.theta0 / 2
        upper = self.expansion.invert(self.R0 + r[::-1] * cmath.exp(1j * half))
        lower = self.expansion.invert(self.R0 + r[1:] * cmath.exp(-1j * half))
        y = np.concatenate([upper, lower])
        return np.concatenate([[1 + 0j], 1 + y, [1 + 0j]])

    def boundary(self, n: int = 400) -> np.ndarray:
        pts = self.base_boundary(n)
        for _ in range(self.n_pullbacks):
            pts = self.B.principal_preimage(pts)
        return pts

    def interior_samples(self, n: int, seed: int = 0) -> np.ndarray:
        """Points of the petal, drawn as pullbacks of random points of P0."""
        rng = np.random.default_rng(seed)
        half = self.theta0 / 2
        ang = rng.uniform(-0.95 * half, 0.95 * half, n)
        rad = np.exp(rng.uniform(math.log(0.5), math.log(1e4), n))
        y = self.expansion.invert(self.R0 + rad * np.exp(1j * ang))
        pts = 1 + y
        for _ in range(self.n_pullbacks):
            pts = self.B.principal_preimage(pts)
        return pts


def build_petal(B: BlaschkeMap, theta0: float = math.pi / 2) -> Petal:
    return Petal(B, theta0)


def full_preimage(B: BlaschkeMap, loop: np.ndarray) -> np.ndarray:
    """B^-1 of a closed loop winding once around the critical value, as one
    closed loop through all d sheets (continuation of the d-th root along the
    unwrapped argument)."""
    m = B.preimage_power(np.asarray(loop, dtype=complex))
    if np.any(np.abs(m) < 1e-14):
        raise TracingError("loop passes through the critical value")
    steps = np.angle(m[1:] / m[:-1])
    if np.abs(steps).max() > math.pi / 2:
        raise TracingError("loop sampled too coarsely near the critical value")
    arg = np.concatenate([[np.angle(m[0])], np.angle(m[0]) + np.cumsum(steps)])
    turns = (arg[-1] - arg[0]) / (2 * math.pi)
    if abs(turns - round(turns)) > 1e-6:
        raise TracingError("loop is not closed")
    mod = np.abs(m) ** (1 / B.d)
    sheets = []
    k_turn = int(round(turns))
    if k_turn == 0:
        raise TracingError("loop does not surround the critical value; preimage splits into d loops")
    reps = B.d // math.gcd(B.d, abs(k_turn))
    for k in range(reps):
        seg = mod * np.exp(1j * (arg + 2 * math.pi * k * k_turn) / B.d)
        sheets.append(seg if k == 0 else seg[1:])
    return np.concatenate(sheets)


def curve_preimages(B: BlaschkeMap, curve: np.ndarray) -> list[np.ndarray]:
    """The d lifts of an open curve avoiding the critical value."""
    m = B.preimage_power(np.asarray(curve, dtype=complex))
    if np.any(np.abs(m) < 1e-14):
        raise TracingError("curve passes through the critical value")
    arg = np.concatenate([[np.angle(m[0])], np.angle(m[0]) + np.cumsum(np.angle(m[1:] / m[:-1]))])
    mod = np.abs(m) ** (1 / B.d)
    return [mod * np.exp(1j * (arg + 2 * math.pi * k) / B.d) for k in range(B.d)]


def petal_preimages(B: BlaschkeMap, P: Petal, n: int, samples: int = 400) -> list[np.ndarray]:
    if n < 1:
        raise ValueError("n must be >= 1")
    curves = []
    cur = P.boundary(samples)
    for _ in range(n):
        cur = full_preimage(B, cur)
        curves.append(cur)
    return curves


def curves_nested(inner: np.ndarray, outer: np.ndarray, margin: float = 1e-3) -> bool:
    """Every sample of ``inner`` away from the circle lies inside the loop ``outer``."""
    pts = inner[np.abs(inner) < 1 - margin]
    pts = pts[:: max(1, len(pts) // 400)]
    return all(winding_number(outer, z) != 0 for z in pts)


def escape_to_petal(B: BlaschkeMap, P: Petal, z: complex, max_iter: int):
    """First k <= max_iter with B^k(z) in the petal, or None."""
    out = escape_times(B, P, np.array([z]), max_iter)[0]
    return None if out < 0 else int(out)


def escape_times(B: BlaschkeMap, P: Petal, z: np.ndarray, max_iter: int) -> np.ndarray:
    """Vectorized escape_to_petal; -1 where the orbit stays out.

    One orbit per point: B^k(z) is in the petal iff the next n iterates keep
    |arg| < pi/d and the n-th lands in the base sector, so a sliding run
    length of the argument condition suffices.
    """
    z = np.asarray(z, dtype=complex)
    w = z.ravel().copy()
    n = P.n_pullbacks
    lim = math.pi / B.d
    out = np.full(w.shape, -1, dtype=np.int64)
    run = np.zeros(w.shape, dtype=np.int64)
    live = np.abs(w) < 1
    for j in range(max_iter + n + 1):
        idx = np.nonzero(live)[0]
        if not len(idx):
            break
        wj = w[idx]
        if j >= n:
            hit = (run[idx] >= n) & P._in_base(wj)
            out[idx[hit]] = j - n
            live[idx[hit]] = False
        good = np.abs(np.angle(wj)) < lim
        run[idx] = np.where(good, run[idx] + 1, 0)
        w[idx] = B(wj)
    return out.reshape(z.shape)


# --- dividing arcs ---


@dataclass
class DividingArcs:
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    h: float
    length: float


class RepellingFatou:
    """Repelling Fatou coordinate psi with psi(B z) = psi(z) + 1, for one
    repelling petal, normalized so the unit circle is the line Im psi = 0."""

    def __init__(self, B: BlaschkeMap, side: int, N: int = 1000):
        self.B = B
        self.side = 1 if side > 0 else -1
        self.N = N
        self.expansion = repelling_expansion(B, self.side)
        probe = cmath.exp(1j * self.side * 0.05)
        self.shift = 0j
        self.shift = 1j * self._raw(probe).imag
        inside = self(0.99 * probe)
        self.inside_sign = 1 if inside.imag > 0 else -1

    def _raw(self, z):
        w = np.asarray(z, dtype=complex)
        for _ in range(self.N):
            w = self.B.principal_preimage(w)
        return -(self.expansion(w - 1) - self.N)

    def __call__(self, z):
        return self._raw(z) - self.shift

    def inverse(self, w):
        target = self.N - (np.asarray(w, dtype=complex) + self.shift)
        z = 1 + self.expansion.invert(target)
        for _ in range(self.N):
            z = self.B(z)
        return z


def dividing_arcs(B: BlaschkeMap, h: float, L: float, per_unit: int = 64, petal: Petal | None = None) -> DividingArcs:
    """Preimages of the lines Im psi = +-h (on the disc side) for t_end - L <= Re psi <= t_end.

    Samples are spaced 1/per_unit apart in Re psi, so B carries samples onto
    samples.  Without a petal t_end = 0; with one, the arcs are continued
    until they have entered the petal and gone one step further.  Each arc
    starts at 1 and runs into the disc.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    arcs = []
    for side in (1, -1):
        psi = RepellingFatou(B, side)
        im = psi.inside_sign * h
        t_end = 0.0
        if petal is not None:
            for k in range(4000):
                if petal.contains(psi.inverse(complex(t_end, im))):
                    break
                t_end += 1.0
            else:
                raise TracingError("arc never reaches the petal")
            t_end += 1.0
        n = int(round(L * per_unit))
        t = t_end - np.arange(n, -1, -1) / per_unit
        pts = psi.inverse(t + 1j * im)
        if np.any(np.abs(pts) >= 1):
            raise TracingError("arc leaves the disc; increase h")
        arcs.append(np.concatenate([[1 + 0j], pts]))
    return DividingArcs(arcs[0], arcs[1], h, L)


def arc_invariance_residual(B: BlaschkeMap, arc: np.ndarray, skip_tail: int) -> float:
    """Max distance from B(sample) to the arc, skipping the last samples whose
    images run past the truncated end.

    Only the segments next to the 4 nearest vertices are measured, which can
    only overestimate the distance.
    """
    from scipy.spatial import cKDTree

    pts = B(arc[1 : len(arc) - skip_tail])
    tree = cKDTree(np.column_stack([arc.real, arc.imag]))
    _, near = tree.query(np.column_stack([pts.real, pts.imag]), k=4)
    worst = 0.0
    last = len(arc) - 1
    for z, idx in zip(pts, near):
        seg = np.unique(np.concatenate([np.clip(idx - 1, 0, last - 1), np.clip(idx, 0, last - 1)]))
        worst = max(worst, float(segment_distance(z, arc[seg], arc[seg + 1]).min()))
    return worst
