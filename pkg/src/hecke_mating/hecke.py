"""The Hecke group generated by a rotation of order d+1 and an involution,
its ideal (d+1)-gon Π, and the tessellation of the disc by translates of Π.

Words are strings over the letters ``s`` (the involution), ``r`` (the
rotation) and ``R`` (its inverse).  A word is read as a composition, so
``"sr"`` is the map z -> s(r(z)).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .complex_geom import Geodesic, MoebiusMap, classify, compose, fixed_points

LETTERS = {"s": "s", "r": "r", "R": "R", "σ": "s", "ρ": "r"}


class WordError(ValueError):
    pass


@dataclass(frozen=True)
class IdealPolygon:
    """Ideal polygon given by its vertices on the unit circle in counter-clockwise order.

    ``transform`` is a group element carrying the base polygon onto this one.
    """

    vertices: tuple[complex, ...]
    word: str = ""
    transform: MoebiusMap | None = field(default=None, compare=False)

    def angles(self) -> np.ndarray:
        return np.mod(np.angle(np.array(self.vertices)), 2 * math.pi)

    def sides(self) -> list[Geodesic]:
        v = self.vertices
        return [Geodesic(v[k], v[(k + 1) % len(v)]) for k in range(len(v))]

    def key(self, digits: int = 8) -> tuple:
        return angle_key(self.vertices, digits)


def angle_key(vertices, digits: int = 8) -> tuple:
    two_pi = 2 * math.pi
    out = []
    for v in vertices:
        a = round(cmath.phase(v) % two_pi, digits)
        if a >= round(two_pi, digits):
            a = 0.0
        out.append(a)
    return tuple(sorted(out))


class HeckeGroup:
    """The group <rho, sigma> for a fixed d >= 2.

    rho is rotation by 2 pi / (d+1); sigma is the order-two map swapping
    1 and omega and fixing the point of the side C_1 nearest the origin.
    """

    def __init__(self, d: int):
        if int(d) != d or d < 2:
            raise ValueError(f"d must be an integer >= 2, got {d!r}")
        self.d = int(d)
        self.n = self.d + 1
        self.omega = cmath.exp(2j * math.pi / self.n)
        w = self.omega
        self.rho = MoebiusMap(cmath.exp(1j * math.pi / self.n), 0, 0, cmath.exp(-1j * math.pi / self.n))
        self.sigma = MoebiusMap(2 * w, -w * (1 + w), 1 + w, -2 * w)
        half = math.pi / self.n
        self.side_radius = math.tan(half)
        self._side_centers = [cmath.exp(1j * half * (2 * j - 1)) / math.cos(half) for j in range(1, self.n + 1)]

    def __repr__(self):
        return f"HeckeGroup(d={self.d})"

    # --- elements ---

    def rho_power(self, k: int) -> MoebiusMap:
        k %= self.n
        e = cmath.exp(1j * math.pi * k / self.n)
        return MoebiusMap(e, 0, 0, 1 / e)

    def alpha(self, j: int) -> MoebiusMap:
        """sigma after rho^j."""
        self._check_index(j)
        return compose(self.sigma, self.rho_power(j))

    def beta(self, j: int) -> MoebiusMap:
        """rho^j after sigma."""
        self._check_index(j)
        return compose(self.rho_power(j), self.sigma)

    def _check_index(self, j: int):
        if not 1 <= j <= self.d:
            raise ValueError(f"index {j} outside 1..{self.d}")

    @cached_property
    def sigma_fixed_point(self) -> complex:
        half = math.pi / self.n
        return (1 - math.sin(half)) / math.cos(half) * cmath.exp(1j * half)

    # --- the base polygon ---

    def vertex(self, k: int) -> complex:
        return self.omega ** (k % self.n)

    def side(self, j: int) -> Geodesic:
        """C_j, joining omega^(j-1) to omega^j."""
        if not 1 <= j <= self.n:
            raise ValueError(f"side index {j} outside 1..{self.n}")
        return Geodesic(self.vertex(j - 1), self.vertex(j))

    def side_circle(self, j: int) -> tuple[complex, float]:
        return self._side_centers[j - 1], self.side_radius

    def base_polygon(self) -> IdealPolygon:
        return IdealPolygon(tuple(self.vertex(k) for k in range(self.n)), "", MoebiusMap.identity())

    def region_index(self, z: complex) -> int:
        """0 for the closed polygon Π, j for the open component D_j of D minus Π beyond C_j."""
        if abs(z) >= 1:
            raise ValueError(f"{z!r} is not in the open unit disc")
        for j, c in enumerate(self._side_centers, start=1):
            if abs(z - c) < self.side_radius:
                return j
        return 0

    def in_closed_region(self, z: complex, j: int, tol: float = 1e-12) -> bool:
        """z in the closure of D_j (within the closed unit disc)."""
        c = self._side_centers[j - 1]
        return abs(z - c) <= self.side_radius + tol and abs(z) <= 1 + tol

    def in_fundamental_domain(self, z: complex, tol: float = 1e-12) -> bool:
        """Closed triangle bounded by C_1 and the radii to 1 and omega."""
        if abs(z) >= 1:
            return False
        if abs(z) > tol:
            a = cmath.phase(z)
            if a < -tol or a > 2 * math.pi / self.n + tol:
                return False
        return abs(z - self._side_centers[0]) >= self.side_radius - tol

    # --- words ---

    def parse_word(self, word: str) -> str:
        out = []
        for ch in word.replace("ρ⁻¹", "R").replace("ρ^-1", "R"):
            if ch.isspace() or ch == "∘":
                continue
            if ch not in LETTERS:
                raise WordError(f"unknown letter {ch!r} in {word!r}")
            out.append(LETTERS[ch])
        return "".join(out)

    def reduce_word(self, word: str) -> str:
        """Free reduction plus sigma^2 = rho^(d+1) = 1, giving alternating normal form."""
        word = self.parse_word(word)
        blocks: list[list] = []  # [letter, exponent]
        for ch in word:
            kind, e = ("s", 1) if ch == "s" else ("r", 1 if ch == "r" else -1)
            if blocks and blocks[-1][0] == kind:
                blocks[-1][1] += e
            else:
                blocks.append([kind, e])
            mod = 2 if kind == "s" else self.n
            blocks[-1][1] %= mod
            if blocks[-1][1] == 0:
                blocks.pop()
        parts = []
        for kind, e in blocks:
            if kind == "s":
                parts.append("s")
            else:
                # shortest representative of rho^e
                parts.append("r" * e if e <= self.n - e else "R" * (self.n - e))
        return "".join(parts)

    def word_map(self, word: str) -> MoebiusMap:
        m = MoebiusMap.identity()
        for ch in self.parse_word(word):
            g = self.sigma if ch == "s" else (self.rho if ch == "r" else self.rho.inverse())
            m = compose(m, g)
        return m

    def evaluate_word(self, word: str, z):
        return self.word_map(word)(z)

    # --- tessellation ---

    def reflection_word(self, j: int) -> str:
        """rho^j sigma rho^-j: carries Π across its side C_(j+1)."""
        return "r" * j + "s" + "R" * j

    def tessellation(self, depth: int) -> list[IdealPolygon]:
        """Translates of Π under reduced words of length <= depth in the side pairings."""
        if depth < 0:
            raise ValueError("depth must be non-negative")
        gens = [self.reflection_word(j) for j in range(self.n)]
        gen_maps = [self.word_map(g) for g in gens]
        base = self.base_polygon()
        tiles = {base.key(): base}
        frontier = [((), MoebiusMap.identity())]
        for _ in range(depth):
            nxt = []
            for idx, m in frontier:
                for j, g in enumerate(gen_maps):
                    if idx and idx[-1] == j:
                        continue
                    m2 = compose(m, g)
                    verts = sorted((m2(v) for v in base.vertices), key=lambda z: cmath.phase(z) % (2 * math.pi))
                    verts = tuple(v / abs(v) for v in verts)
                    word = "".join(gens[k] for k in idx + (j,))
                    poly = IdealPolygon(verts, word, m2)
                    key = poly.key()
                    if key not in tiles:
                        tiles[key] = poly
                    nxt.append((idx + (j,), m2))
            frontier = nxt
        return list(tiles.values())


def polygon_contains(group: HeckeGroup, poly: IdealPolygon, z: complex, margin: float = 1e-9) -> bool:
    """Strict interior test: pull z back to the base polygon and check it clears every side."""
    w = poly.transform.inverse()(z)
    if not isinstance(w, complex) or abs(w) >= 1:
        return False
    return all(abs(w - c) > group.side_radius + margin for c in group._side_centers)


def interior_samples(group: HeckeGroup, n_radial: int = 3) -> list[complex]:
    """A few points well inside Π, symmetric under the rotation."""
    r_max = abs(group.sigma_fixed_point)
    pts = [0j]
    for k in range(group.n):
        for s in range(1, n_radial + 1):
            ang = 2 * math.pi * (k + 0.5) / group.n
            pts.append(0.8 * r_max * s / n_radial * cmath.exp(1j * ang))
            pts.append(0.8 * r_max * s / n_radial * cmath.exp(1j * (ang - math.pi / group.n)))
    return pts


def group_residuals(group: HeckeGroup) -> dict[str, float]:
    """Residuals of the defining relations and the alpha/beta identities."""
    eye = np.eye(2)

    def dist_to_identity(m: MoebiusMap) -> float:
        mm = m.matrix()
        return float(min(np.abs(mm - eye).max(), np.abs(mm + eye).max()))

    def dist(m1: MoebiusMap, m2: MoebiusMap) -> float:
        a, b = m1.matrix(), m2.matrix()
        return float(min(np.abs(a - b).max(), np.abs(a + b).max()))

    res = {
        "sigma^2": dist_to_identity(compose(group.sigma, group.sigma)),
        "rho^(d+1)": dist_to_identity(_power(group.rho, group.n)),
        "sigma(1)-omega": abs(group.sigma(1) - group.omega),
        "sigma(omega)-1": abs(group.sigma(group.omega) - 1),
    }
    conj = 0.0
    for j in range(1, group.d + 1):
        lhs = compose(compose(group.sigma, group.alpha(j)), group.sigma.inverse())
        rhs = group.alpha(group.d + 1 - j).inverse()
        conj = max(conj, dist(lhs, rhs))
    res["sigma alpha_j sigma^-1 = alpha_(d+1-j)^-1"] = conj
    fix1 = fixed_points(group.alpha(1))[0]
    fixd = fixed_points(group.alpha(group.d))[0]
    res["fix(alpha_1)-1"] = abs(fix1 - 1)
    res["fix(alpha_d)-omega"] = abs(fixd - group.omega)
    return res


def _power(m: MoebiusMap, k: int) -> MoebiusMap:
    out = MoebiusMap.identity()
    for _ in range(k):
        out = compose(out, m)
    return out


def alpha_types(group: HeckeGroup) -> list[str]:
    return [classify(group.alpha(j)).kind for j in range(1, group.d + 1)]


def side_images(group: HeckeGroup, j: int, n: int = 64) -> float:
    """Max distance from alpha_j(C_(d+2-j)) samples to C_1; zero when alpha_j maps the side onto C_1."""
    c1, r1 = group.side_circle(1)
    pts = group.side(group.d + 2 - j).sample(n)[1:-1]
    img = group.alpha(j)(pts)
    return float(np.abs(np.abs(img - c1) - r1).max())


__all__ = [
    "HeckeGroup",
    "IdealPolygon",
    "WordError",
    "angle_key",
    "alpha_types",
    "group_residuals",
    "interior_samples",
    "polygon_contains",
    "side_images",
]

