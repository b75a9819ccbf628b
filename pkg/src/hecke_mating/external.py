"""Quotient maps of the disc and the two piecewise-Möbius external maps built
from the Hecke group: the Hecke map H_d and the Farey map F_d.

theta1 is z -> z^(d+1), the quotient by the rotation.  theta2 is the quotient
by the involution: conjugate by the disc automorphism M sending the fixed
point of sigma to 0 and side C_1 to the imaginary diameter, then w -> -w^2.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .complex_geom import MoebiusMap, compose
from .hecke import HeckeGroup

SLIT_BAND = 1e-12


class SlitError(ValueError):
    """Input lies on the branch cut [0, 1) of an inverse quotient branch."""


class DomainError(ValueError):
    """Input outside the domain of a piecewise map."""


def disc_automorphism(group: HeckeGroup) -> MoebiusMap:
    """Automorphism M of the disc with M(fix sigma) = 0, M(C_1) the imaginary
    diameter, Π on the left, M(1) = -i and M(omega) = i."""
    p = group.sigma_fixed_point
    lam = cmath.exp(-1j * math.pi / group.n)
    m = MoebiusMap(lam, -lam * p, -p.conjugate(), 1)
    if abs(m(1) + 1j) > 1e-9:
        m = MoebiusMap(-lam, lam * p, -p.conjugate(), 1)
    if abs(m(1) + 1j) > 1e-9 or abs(m(group.omega) - 1j) > 1e-9:
        raise RuntimeError("could not normalize the disc automorphism")
    return m


@dataclass
class QuotientMap:
    kind: str  # "theta1" | "theta2"
    group: HeckeGroup
    M: MoebiusMap | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("theta1", "theta2"):
            raise ValueError(f"unknown quotient {self.kind!r}")
        if self.kind == "theta2" and self.M is None:
            self.M = disc_automorphism(self.group)
        self._Minv = self.M.inverse() if self.M is not None else None

    def apply(self, z):
        if self.kind == "theta1":
            return z ** self.group.n
        w = self.M(z)
        return -(w * w)

    __call__ = apply

    def on_slit(self, u: complex) -> bool:
        return abs(u.imag) < SLIT_BAND and 0 < u.real <= 1 + SLIT_BAND

    def inverse_branch(self, u: complex, slit: str = "raise") -> complex:
        """Preimage in the sector [0, 2 pi/(d+1)] (theta1) or on the Π side of
        C_1 (theta2).  On the cut (0, 1] either raise or take the limit from the
        upper half-plane (``slit="upper"``) or the lower one (``slit="lower"``)."""
        u = complex(u)
        if abs(u) > 1 + 1e-12:
            raise ValueError(f"{u!r} is outside the closed unit disc")
        side = 0
        if self.on_slit(u):
            if slit == "raise":
                raise SlitError(f"{u!r} lies on the cut [0, 1)")
            side = 1 if slit == "upper" else -1
        if self.kind == "theta1":
            n = self.group.n
            r = abs(u)
            if r == 0:
                return 0j
            a = cmath.phase(u) % (2 * math.pi)
            if side == 1:
                a = 0.0
            elif side == -1:
                a = 2 * math.pi
            return r ** (1 / n) * cmath.exp(1j * a / n)
        if u == 0:
            return self._Minv(0j)
        if side:
            w = side * 1j * math.sqrt(u.real)
        else:
            w = -cmath.sqrt(-u)
        return self._Minv(w)


class ExternalMap:
    """Piecewise Möbius circle covering of degree d fixing 1.

    ``kind="hecke"``: H_d = theta2 o alpha_(d+2-j) o theta2^-1 on theta2(closure D_j), j = 2..d+1.
    ``kind="farey"``: F_d = theta1 o sigma o theta1^-1 on the closed disc minus int theta1(Π).
    """

    def __init__(self, kind: str, d: int):
        if kind not in ("hecke", "farey"):
            raise ValueError(f"unknown external map {kind!r}")
        self.kind = kind
        self.group = HeckeGroup(d)
        self.d = self.group.d
        self.theta1 = QuotientMap("theta1", self.group)
        self.theta2 = QuotientMap("theta2", self.group)
        self.M = self.theta2.M

    def __repr__(self):
        return f"ExternalMap({self.kind!r}, d={self.d})"

    def piece_moebius(self, j: int) -> MoebiusMap:
        """The Möbius map applied upstairs on piece j (2 <= j <= d+1)."""
        g = self.group
        if self.kind == "hecke":
            return g.alpha(self.d + 2 - j)
        return g.beta(self.d + 2 - j)

    def _closed_piece(self, z: complex, tol: float = 1e-9) -> int:
        cands = [j for j in range(2, self.d + 2) if self.group.in_closed_region(z, j, tol)]
        if not cands:
            return 0
        # at a shared ideal vertex take the arc starting there (counter-clockwise)
        return max(cands)

    def piece(self, u: complex, slit: str = "upper") -> int:
        u = complex(u)
        if self.kind == "hecke":
            z = self.theta2.inverse_branch(u, slit=slit)
            j = self._closed_piece(z)
        else:
            z = self.theta1.inverse_branch(u, slit=slit)
            if not self.group.in_closed_region(z, 1, 1e-9):
                return 0
            j = self._closed_piece(self.group.sigma(z))
        return j

    def __call__(self, u: complex, slit: str = "upper") -> complex:
        u = complex(u)
        if abs(u) > 1 + 1e-9:
            raise DomainError(f"{u!r} is outside the closed unit disc")
        g = self.group
        if self.kind == "hecke":
            z = self.theta2.inverse_branch(u, slit=slit)
            j = self._closed_piece(z)
            if j == 0:
                raise DomainError(f"{u!r} is inside theta2(Π)")
            return self.theta2.apply(g.alpha(self.d + 2 - j)(z))
        z = self.theta1.inverse_branch(u, slit=slit)
        if not g.in_closed_region(z, 1, 1e-9):
            raise DomainError(f"{u!r} is inside theta1(Π)")
        return self.theta1.apply(g.sigma(z))

    def evaluate(self, us) -> np.ndarray:
        return np.array([self(u) for u in np.ravel(us)]).reshape(np.shape(us))

    # --- geometry used for pictures and tests ---

    def circle_breakpoints(self) -> list[complex]:
        """Points of the unit circle where the piecewise formula changes."""
        g = self.group
        pts = [1 + 0j]
        for k in range(2, self.d + 1):
            v = g.vertex(k)
            if self.kind == "hecke":
                pts.append(self.theta2.apply(v))
            else:
                pts.append(self.theta1.apply(g.sigma(v)))
        return pts

    def piece_boundaries(self, n: int = 400) -> list[np.ndarray]:
        """Curves separating the pieces: theta2(C_j) for the Hecke map,
        theta1(sigma(C_j)) for the Farey map, j = 2..d+1."""
        g = self.group
        out = []
        for j in range(2, self.d + 2):
            pts = g.side(j).sample(n)
            if self.kind == "hecke":
                out.append(self.theta2.apply(pts))
            else:
                out.append(self.theta1.apply(g.sigma(pts)))
        return out

    def filled_boundary(self, n: int = 800) -> list[np.ndarray]:
        """Boundary of the complementary region theta(Π)."""
        if self.kind == "hecke":
            return self.piece_boundaries(n)
        return [self.theta1.apply(self.group.side(1).sample(n))]

    def branch_germ(self, side: str):
        """Analytic germ at 1 agreeing with the map on Im(u) > 0 (``top``) or Im(u) < 0 (``bottom``)."""
        g = self.group
        if side not in ("top", "bottom"):
            raise ValueError(side)
        if self.kind == "hecke":
            alpha = g.alpha(self.d) if side == "top" else g.alpha(1)
            sgn = 1j if side == "top" else -1j
            Minv = self.M.inverse()
            th2 = self.theta2

            def germ(u):
                return th2.apply(alpha(Minv(sgn * np.sqrt(u))))

            return germ
        rot = 1 if side == "top" else g.omega
        n = g.n
        sigma = g.sigma

        def germ(u):
            return sigma(rot * u ** (1 / n)) ** n

        return germ


def semiconjugacy(fmap: ExternalMap, u: complex) -> complex:
    """p = theta2 o theta1^-1, carrying the Farey map to the Hecke map on
    F_d^-1(domain).  Accepts any ExternalMap and uses its group."""
    g = fmap.group
    th1 = QuotientMap("theta1", g)
    th2 = QuotientMap("theta2", g)
    z = th1.inverse_branch(complex(u), slit="upper")
    sz = g.sigma(z)
    if not any(g.in_closed_region(sz, j, 1e-9) for j in range(2, g.n + 1)):
        raise DomainError(f"{u!r} is outside the domain of the semiconjugacy")
    return th2.apply(z)


def circle_winding(fmap: ExternalMap, n: int = 4096) -> int:
    """Degree of the restriction to the unit circle."""
    t = 2 * math.pi * (np.arange(n) + 0.5) / n
    vals = np.array([fmap(cmath.exp(1j * x)) for x in t])
    turns = np.angle(np.roll(vals, -1) / vals).sum() / (2 * math.pi)
    return int(round(turns))


def circle_lift(fmap: ExternalMap, n: int = 20000) -> tuple[np.ndarray, np.ndarray]:
    """Lift L of the circle map on [0, 1] with L(0) = 0, in turns."""
    t = np.arange(n + 1) / n
    vals = np.array([fmap(cmath.exp(2j * math.pi * x), slit="upper") for x in t[:-1]] + [1 + 0j])
    steps = np.angle(vals[1:] / vals[:-1]) / (2 * math.pi)
    lift = np.concatenate([[0.0], np.cumsum(steps)])
    return t, lift


def circle_fixed_points(fmap: ExternalMap, n: int = 20000) -> list[float]:
    """Fixed points of the circle map, as turns in [0, 1)."""
    t, lift = circle_lift(fmap, n)
    g = lift - t
    out = [0.0]
    for k in range(1, n):
        lo, hi = g[k - 1], g[k]
        m = math.floor(hi) if hi > lo else math.floor(lo)
        if min(lo, hi) < m <= max(lo, hi) and k > 1:
            s = (m - lo) / (hi - lo)
            out.append(t[k - 1] + s * (t[k] - t[k - 1]))
    return out


def circle_derivative(fmap: ExternalMap, turn: float, h: float = 1e-6) -> float:
    z0 = fmap(cmath.exp(2j * math.pi * (turn - h)))
    z1 = fmap(cmath.exp(2j * math.pi * (turn + h)))
    return abs(cmath.phase(z1 / z0)) / (4 * math.pi * h)


# --- parabolic asymptotics at 1 ---


@dataclass
class ParabolicFit:
    side: str
    linear: complex
    quadratic: complex
    coefficient: float  # a on the top branch, b on the bottom one
    imag_residual: float
    radii: np.ndarray
    remainders: np.ndarray
    slope: float


def fit_parabolic_germ(germ, side: str, radii=None, n_angles: int = 20, check_radii=None) -> ParabolicFit:
    """Fit germ(1 + z) = 1 + c1 z + c2 z^2 + O(z^3) by least squares on small circles.

    On the top branch c2 = -i a, on the bottom one c2 = i b.  ``slope`` is the
    log-log slope of the normalized remainder |rest| / r^2 against r, which is
    1 for a genuine cubic remainder.
    """
    if radii is None:
        radii = np.logspace(-2, -4, 5)
    if check_radii is None:
        check_radii = np.logspace(-1, -4, 7)
    ang = 2 * math.pi * (np.arange(n_angles) + 0.25) / n_angles
    zeta = (np.asarray(radii)[:, None] * np.exp(1j * ang)[None, :]).ravel()
    h = (germ(1 + zeta) - 1) / zeta
    basis = np.stack([np.ones_like(zeta), zeta, zeta**2, zeta**3], axis=1)
    coef, *_ = np.linalg.lstsq(basis, h, rcond=None)
    c1, c2 = coef[0], coef[1]
    val = 1j * c2 if side == "top" else -1j * c2
    rem = []
    for r in check_radii:
        zz = r * np.exp(1j * ang)
        rest = germ(1 + zz) - 1 - c1 * zz - c2 * zz**2
        rem.append(np.abs(rest).max() / r**2)
    rem = np.array(rem)
    slope = np.polyfit(np.log(check_radii), np.log(rem), 1)[0]
    return ParabolicFit(side, c1, c2, val.real, abs(val.imag), np.asarray(check_radii), rem, slope)


def parabolic_fit(fmap: ExternalMap) -> tuple[ParabolicFit, ParabolicFit]:
    return (
        fit_parabolic_germ(fmap.branch_germ("top"), "top"),
        fit_parabolic_germ(fmap.branch_germ("bottom"), "bottom"),
    )


# --- the Farey-like restriction of the Hecke map ---


def monogon(eps: float, n: int = 600) -> np.ndarray:
    """Boundary of the convex hull of the eps-disc about 0 and the point 1.

    A Jordan curve around [0, 1] meeting the unit circle only at 1, where it
    has a wedge.  Starts and ends at 1, running counter-clockwise.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    beta = math.acos(eps)
    top = eps * cmath.exp(1j * beta)
    m = max(n // 4, 8)
    seg1 = 1 + (top - 1) * np.linspace(0, 1, m, endpoint=False)
    arc = eps * np.exp(1j * np.linspace(beta, 2 * math.pi - beta, n - 2 * m, endpoint=False))
    seg2 = top.conjugate() + (1 - top.conjugate()) * np.linspace(0, 1, m + 1)
    return np.concatenate([seg1, arc, seg2])


def hecke_preimage_arcs(hmap: ExternalMap, curve: np.ndarray) -> list[np.ndarray]:
    """Pull back a curve starting and ending at 1 (and otherwise off [0, 1]) by
    each of the d inverse branches of the Hecke map."""
    if hmap.kind != "hecke":
        raise ValueError("needs the Hecke map")
    g = hmap.group
    th2 = hmap.theta2
    inner = [th2.inverse_branch(u) for u in curve[1:-1]]
    first = th2.inverse_branch(1 + 0j, slit="upper" if curve[1].imag > 0 else "lower")
    last = th2.inverse_branch(1 + 0j, slit="upper" if curve[-2].imag > 0 else "lower")
    pts = np.array([first] + inner + [last])
    arcs = []
    for j in range(2, g.n + 1):
        inv = hmap.piece_moebius(j).inverse()
        arcs.append(th2.apply(inv(pts)))
    return arcs


def arc_components(arcs: list[np.ndarray], gap: float = 1e-6) -> int:
    """Number of connected pieces after removing the points where arcs touch the unit circle."""
    parent = list(range(len(arcs)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    interiors = [a[np.abs(a) < 1 - 1e-6] for a in arcs]
    for i in range(len(arcs)):
        for k in range(i + 1, len(arcs)):
            if len(interiors[i]) and len(interiors[k]):
                dmin = np.abs(interiors[i][:, None] - interiors[k][None, :]).min()
                if dmin < gap:
                    parent[find(i)] = find(k)
    return len({find(i) for i in range(len(arcs))})


def conjugated(group: HeckeGroup, m: MoebiusMap) -> MoebiusMap:
    """m conjugated into the M-coordinates, M o m o M^-1."""
    M = disc_automorphism(group)
    return compose(compose(M, m), M.inverse())
