"""Möbius maps on the Riemann sphere, hyperbolic geodesics in the unit disc,
and a few planar polyline helpers shared by the rest of the package."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

PARABOLIC_TOL = 1e-9


class _Infinity:
    """The point at infinity. A singleton; compare with ``is``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def is_inf(z) -> bool:
    return z is INF


class DegenerateMapError(ValueError):
    pass


@dataclass(frozen=True)
class MoebiusMap:
    """z -> (a z + b) / (c z + d), stored with determinant 1."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(x) for x in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        scale = max(abs(a), abs(b), abs(c), abs(d), 1e-300)
        if abs(det) <= 1e-14 * scale * scale:
            raise DegenerateMapError(f"singular matrix, det={det!r}")
        s = cmath.sqrt(det)
        object.__setattr__(self, "a", a / s)
        object.__setattr__(self, "b", b / s)
        object.__setattr__(self, "c", c / s)
        object.__setattr__(self, "d", d / s)

    @classmethod
    def identity(cls) -> MoebiusMap:
        return cls(1, 0, 0, 1)

    @classmethod
    def from_matrix(cls, m) -> MoebiusMap:
        return cls(m[0][0], m[0][1], m[1][0], m[1][1])

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def __call__(self, z):
        return moebius_apply(self, z)

    def __matmul__(self, other: MoebiusMap) -> MoebiusMap:
        return compose(self, other)

    def inverse(self) -> MoebiusMap:
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    @property
    def trace(self) -> complex:
        return self.a + self.d

    def close_to(self, other: MoebiusMap, tol: float = 1e-10) -> bool:
        """Equality as maps, i.e. up to the sign of the normalized matrix."""
        m, n = self.matrix(), other.matrix()
        return min(np.abs(m - n).max(), np.abs(m + n).max()) < tol


def moebius_apply(m: MoebiusMap, z):
    """Apply ``m`` to a complex number, ``INF``, or an ndarray of finite points.

    For arrays, poles come back as complex infinity.
    """
    if z is INF:
        if m.c == 0:
            return INF
        return m.a / m.c
    if isinstance(z, np.ndarray):
        with np.errstate(divide="ignore", invalid="ignore"):
            den = m.c * z + m.d
            out = (m.a * z + m.b) / den
        out[den == 0] = complex(np.inf, 0)
        return out
    z = complex(z)
    den = m.c * z + m.d
    if den == 0:
        return INF
    return (m.a * z + m.b) / den


def compose(f: MoebiusMap, g: MoebiusMap) -> MoebiusMap:
    """f after g."""
    return MoebiusMap.from_matrix(f.matrix() @ g.matrix())


@dataclass(frozen=True)
class MoebiusClass:
    kind: str  # identity | elliptic | parabolic | hyperbolic | loxodromic
    trace_sq: complex
    near_parabolic: bool = False


def classify(m: MoebiusMap, tol: float = PARABOLIC_TOL) -> MoebiusClass:
    """Conjugacy type from the normalized squared trace.

    ``near_parabolic`` flags maps declared parabolic only because the
    squared trace sits within ``tol`` of 4 without being exactly 4.
    """
    t2 = m.trace**2
    if np.abs(m.matrix() - np.eye(2)).max() < tol or np.abs(m.matrix() + np.eye(2)).max() < tol:
        return MoebiusClass("identity", t2)
    if abs(t2 - 4) < tol:
        return MoebiusClass("parabolic", t2, near_parabolic=t2 != 4)
    if abs(t2.imag) < tol:
        if -tol <= t2.real < 4:
            return MoebiusClass("elliptic", t2)
        if t2.real > 4:
            return MoebiusClass("hyperbolic", t2)
    return MoebiusClass("loxodromic", t2)


def fixed_points(m: MoebiusMap, tol: float = PARABOLIC_TOL) -> list:
    """Roots of c z^2 + (d - a) z - b = 0, with INF when c vanishes.

    A parabolic map returns its single fixed point once.
    """
    a, b, c, d = m.a, m.b, m.c, m.d
    kind = classify(m, tol).kind
    if kind == "identity":
        raise ValueError("identity fixes every point")
    if abs(c) < 1e-15:
        if abs(d - a) < 1e-15:
            return [INF]
        return [b / (d - a), INF]
    if kind == "parabolic":
        return [(a - d) / (2 * c)]
    disc = cmath.sqrt((d - a) ** 2 + 4 * b * c)
    # pick the numerically stable quadratic root first
    q = -0.5 * ((d - a) + (disc if ((d - a).conjugate() * disc).real >= 0 else -disc))
    r1 = q / c
    r2 = -b / q if q != 0 else (a - d) / c - r1
    return [r1, r2]


def chordal_distance(z, w) -> float:
    """Distance on the Riemann sphere of diameter 1 (so at most 1)."""
    if z is INF and w is INF:
        return 0.0
    if z is INF:
        return 1 / math.sqrt(1 + abs(w) ** 2)
    if w is INF:
        return 1 / math.sqrt(1 + abs(z) ** 2)
    return abs(z - w) / math.sqrt((1 + abs(z) ** 2) * (1 + abs(w) ** 2))


# --- hyperbolic geodesics in the unit disc ---


@dataclass(frozen=True)
class Geodesic:
    """Hyperbolic geodesic between two distinct points of the unit circle."""

    p: complex
    q: complex

    def __post_init__(self):
        for z in (self.p, self.q):
            if abs(abs(z) - 1) > 1e-9:
                raise ValueError(f"endpoint {z!r} is not on the unit circle")
        if abs(self.p - self.q) < 1e-12:
            raise ValueError("coincident endpoints")

    @property
    def is_diameter(self) -> bool:
        return abs(self.p + self.q) < 1e-12

    def circle(self) -> tuple[complex, float]:
        """Center and radius of the orthogonal circle carrying the geodesic."""
        if self.is_diameter:
            raise ValueError("a diameter has no finite carrying circle")
        s = self.p + self.q
        center = 2 * s / abs(s) ** 2
        return center, abs(center - self.p)

    def point(self, t):
        return geodesic_point(self, t)

    def sample(self, n: int) -> np.ndarray:
        return geodesic_point(self, np.linspace(0.0, 1.0, n))


def geodesic_point(g: Geodesic, t):
    """Point at parameter t in [0, 1]; angle-linear along the carrying circle."""
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t > 1)):
        raise ValueError("t outside [0, 1]")
    if g.is_diameter:
        out = g.p + (g.q - g.p) * t
    else:
        c, r = g.circle()
        a0 = cmath.phase(g.p - c)
        a1 = cmath.phase(g.q - c)
        da = (a1 - a0 + math.pi) % (2 * math.pi) - math.pi
        out = c + r * np.exp(1j * (a0 + da * t))
    return complex(out) if out.ndim == 0 else out


def orthogonality_residual(g: Geodesic) -> float:
    """| |c|^2 - 1 - r^2 |, zero when the carrying circle meets the unit circle at right angles."""
    if g.is_diameter:
        return 0.0
    c, r = g.circle()
    return abs(abs(c) ** 2 - 1 - r * r)


# --- polylines ---


def winding_number(poly: np.ndarray, z: complex) -> int:
    """Winding number of the closed polyline ``poly`` around ``z``."""
    v = np.asarray(poly) - z
    ang = np.angle(np.roll(v, -1) / v)
    return int(round(ang.sum() / (2 * math.pi)))


def segment_distance(z, a, b):
    """Distance from z to the segments [a, b] (broadcasting)."""
    ab = b - a
    den = np.abs(ab) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(den > 0, ((z - a) * np.conj(ab)).real / den, 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.abs(z - (a + t * ab))


def polyline_distance(poly: np.ndarray, z: complex, closed: bool = True) -> float:
    poly = np.asarray(poly)
    a = poly if closed else poly[:-1]
    b = np.roll(poly, -1) if closed else poly[1:]
    return float(segment_distance(z, a, b).min())


def hausdorff(a: np.ndarray, b: np.ndarray, closed: bool = True) -> float:
    """Symmetric Hausdorff distance between vertex sets and polylines."""
    d1 = max(polyline_distance(b, z, closed) for z in a)
    d2 = max(polyline_distance(a, z, closed) for z in b)
    return max(d1, d2)


def unwrap_winding(values: np.ndarray) -> float:
    """Net number of turns of a closed sampled loop around 0."""
    ang = np.angle(np.roll(values, -1) / values)
    return ang.sum() / (2 * math.pi)
