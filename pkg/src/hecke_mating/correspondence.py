"""Polynomials, simultaneous root finding, and the multivalued maps obtained
by deleting the diagonal from the graph of w -> f(w) = f(z).

Cov0(f)(z) is the zero set of (f(w) - f(z)) / (w - z): the other points with
the same f-value.  The correspondences used here are Cov0(Q) after J and J
after Cov0(P), with J(z) = 1/z.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .complex_geom import INF

MAX_ITER = 200
CLUSTER_TOL = 1e-7
MERGE_TOL = 1e-10


class RootFindingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Polynomial:
    """Coefficients stored lowest degree first; trailing zeros stripped."""

    coeffs: tuple

    def __init__(self, coeffs):
        c = [complex(x) for x in coeffs]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        if len(self.coeffs) == 1 and self.coeffs[0] == 0:
            return -1
        return len(self.coeffs) - 1

    def highest_first(self) -> np.ndarray:
        return np.array(self.coeffs[::-1], dtype=np.complex128)

    def __call__(self, z):
        if z is INF:
            return INF if self.degree > 0 else self.coeffs[0]
        out = 0j if np.ndim(z) == 0 else np.zeros(np.shape(z), dtype=complex)
        for c in self.coeffs[::-1]:
            out = out * z + c
        return out

    def derivative(self) -> Polynomial:
        if self.degree <= 0:
            return Polynomial([0])
        return Polynomial([k * c for k, c in enumerate(self.coeffs)][1:])

    def deflate(self, z: complex) -> Polynomial:
        """(f(w) - f(z)) / (w - z) as a polynomial in w."""
        if self.degree < 1:
            raise ValueError("need degree >= 1")
        out = kernels.deflate(self.highest_first(), complex(z))
        return Polynomial(out[::-1])

    def shifted(self, u: complex) -> Polynomial:
        """f - u."""
        c = list(self.coeffs)
        c[0] -= u
        return Polynomial(c)

    def coefficient_scale(self, z: complex) -> float:
        """Sum |a_k| |z|^k; the natural size of rounding error in f(z)."""
        r = abs(z)
        return sum(abs(c) * r**k for k, c in enumerate(self.coeffs))


@dataclass(frozen=True)
class ImageSet:
    """Finite multiset of points of the sphere (INF allowed)."""

    points: tuple
    multiplicities: tuple

    def __len__(self):
        return sum(self.multiplicities)

    def expanded(self) -> list:
        out = []
        for p, m in zip(self.points, self.multiplicities):
            out.extend([p] * m)
        return out

    def finite(self) -> np.ndarray:
        return np.array([p for p in self.expanded() if p is not INF], dtype=complex)

    def distance(self, other: ImageSet) -> float:
        """Matching distance between two multisets of finite points (INF ignored only if in both)."""
        a, b = self.expanded(), other.expanded()
        if len(a) != len(b):
            return math.inf
        ia = sum(p is INF for p in a)
        ib = sum(p is INF for p in b)
        if ia != ib:
            return math.inf
        fa = np.array([p for p in a if p is not INF], dtype=complex)
        fb = np.array([p for p in b if p is not INF], dtype=complex)
        if not len(fa):
            return 0.0
        from scipy.optimize import linear_sum_assignment

        cost = np.abs(fa[:, None] - fb[None, :])
        r, c = linear_sum_assignment(cost)
        return float(cost[r, c].max())


def _cluster(p: Polynomial, roots: np.ndarray, tol: float) -> ImageSet:
    """Merge approximations of a multiple root.

    A cluster of m approximations is accepted as one m-fold root when its
    radius is below max(tol (1 + |z|), the attainable accuracy of an m-fold
    root, (1e3 eps S / |f^(m)(z)/m!|)^(1/m)).
    """
    clusters = [[z] for z in roots]
    eps = np.finfo(float).eps
    merged = True
    while merged and len(clusters) > 1:
        merged = False
        best = None
        for i in range(len(clusters)):
            for k in range(i + 1, len(clusters)):
                pts = np.array(clusters[i] + clusters[k])
                cen = pts.mean()
                rad = np.abs(pts - cen).max()
                m = len(pts)
                lim = tol * (1 + abs(cen))
                deriv = p
                for _ in range(m):
                    deriv = deriv.derivative()
                tm = abs(deriv(cen)) / math.factorial(m)
                if tm > 0:
                    lim = max(lim, 4 * (1e3 * eps * p.coefficient_scale(cen) / tm) ** (1 / m))
                if rad <= lim and (best is None or rad < best[0]):
                    best = (rad, i, k)
        if best is not None:
            _, i, k = best
            clusters[i] = clusters[i] + clusters[k]
            del clusters[k]
            merged = True
    pts = tuple(_centre(p, c) for c in clusters)
    mult = tuple(len(c) for c in clusters)
    order = sorted(range(len(pts)), key=lambda j: (round(pts[j].real, 12), round(pts[j].imag, 12)))
    return ImageSet(tuple(pts[j] for j in order), tuple(mult[j] for j in order))


def _centre(p: Polynomial, cluster: list) -> complex:
    """Mean of the cluster, refined by Newton on p^(m-1), where an m-fold
    root is simple.  The step is kept only if it stays inside the cluster."""
    z = complex(np.mean(cluster))
    m = len(cluster)
    if m == 1:
        return z
    rad = max(abs(w - z) for w in cluster)
    g = p
    for _ in range(m - 1):
        g = g.derivative()
    dg = g.derivative()
    w = z
    for _ in range(4):
        d = dg(w)
        if d == 0:
            break
        w = w - g(w) / d
    return complex(w) if abs(w - z) <= rad else z


def poly_roots(p: Polynomial, max_iter: int = MAX_ITER, tol: float = CLUSTER_TOL) -> ImageSet:
    """All roots with multiplicity, by Aberth–Ehrlich iteration from a perturbed circle."""
    if not isinstance(p, Polynomial):
        p = Polynomial(p)
    if p.degree < 0:
        raise ValueError("the zero polynomial has no finite root set")
    if p.degree == 0:
        return ImageSet((), ())
    c = p.highest_first()
    z = np.empty(p.degree, dtype=np.complex128)
    kernels.initial_roots(c, z)
    kernels.aberth(c, z, max_iter, 1e-15)
    if not np.all(np.isfinite(z)):
        raise RootFindingError("root iteration diverged")
    scale = np.array([p.coefficient_scale(x) for x in z])
    floor = 1e-14 * max(abs(a) for a in p.coeffs)
    resid = np.abs(p(z))
    if np.any(resid > 1e-6 * scale + floor):
        raise RootFindingError(f"no convergence in {max_iter} iterations (residual {resid.max():.3g})")
    return _cluster(p, z, tol)


def _polish(f: Polynomial, z: complex, s: ImageSet) -> ImageSet:
    """Newton steps on f(w) - f(z) = 0 for the simple roots, kept only when
    the residual of the undeflated equation goes down."""
    df = f.derivative()
    fz = f(z)
    pts = list(s.points)
    for k, (w, m) in enumerate(zip(s.points, s.multiplicities)):
        if m != 1 or abs(w - z) < 1e-6 * (1 + abs(z)):
            continue
        r = abs(f(w) - fz)
        for _ in range(3):
            d = df(w)
            if d == 0:
                break
            w2 = w - (f(w) - fz) / d
            r2 = abs(f(w2) - fz)
            if r2 >= r:
                break
            w, r = w2, r2
        pts[k] = complex(w)
    return ImageSet(tuple(pts), s.multiplicities)


def cov0(f: Polynomial, z) -> ImageSet:
    """Other points with the same f-value as z (multiplicities kept)."""
    if z is INF:
        return ImageSet((INF,), (f.degree - 1,))
    return _polish(f, z, poly_roots(f.deflate(z)))


def J(z):
    if z is INF:
        return 0j
    if z == 0:
        return INF
    return 1 / z


@dataclass(frozen=True)
class Correspondence:
    kind: str  # "cov_after_j" | "j_after_cov"
    poly: Polynomial

    def __post_init__(self):
        if self.kind not in ("cov_after_j", "j_after_cov"):
            raise ValueError(self.kind)
        if self.poly.degree < 2:
            raise ValueError("need a polynomial of degree >= 2")

    def images(self, z) -> ImageSet:
        if self.kind == "cov_after_j":
            return cov0(self.poly, J(z))
        return _map_set(J, cov0(self.poly, z))

    def preimages(self, w) -> ImageSet:
        if self.kind == "cov_after_j":
            return _map_set(J, cov0(self.poly, w))
        return cov0(self.poly, J(w))


def _map_set(fn, s: ImageSet) -> ImageSet:
    return ImageSet(tuple(fn(p) for p in s.points), s.multiplicities)


def corr_images(C: Correspondence, z) -> ImageSet:
    return C.images(z)


def corr_preimages(C: Correspondence, w) -> ImageSet:
    return C.preimages(w)


@dataclass
class OrbitTree:
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)  # (parent index, child index)
    depth_of: list = field(default_factory=list)
    truncated: bool = False

    def points(self) -> np.ndarray:
        return np.array([p for p in self.nodes if p is not INF], dtype=complex)

    def write_edges(self, path) -> None:
        lines = []
        for i, j in self.edges:
            a, b = self.nodes[i], self.nodes[j]
            if a is INF or b is INF:
                continue
            lines.append(f"{a.real:.15g} {a.imag:.15g} {b.real:.15g} {b.imag:.15g}")
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def orbit_tree(C: Correspondence, z0, depth: int, cap: int = 100_000, merge_tol: float = MERGE_TOL) -> OrbitTree:
    """Breadth-first forward orbit; coincident points (within merge_tol) share a node."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    tree = OrbitTree(nodes=[z0], depth_of=[0])
    buckets: dict = {}

    def key(z):
        if z is INF:
            return ("inf",)
        s = merge_tol * 10
        return (math.floor(z.real / s), math.floor(z.imag / s))

    def lookup(z):
        if z is INF:
            return buckets.get(("inf",), [None])[0]
        kx, ky = key(z)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for idx in buckets.get((kx + dx, ky + dy), ()):
                    if abs(tree.nodes[idx] - z) <= merge_tol:
                        return idx
        return None

    buckets.setdefault(key(z0), []).append(0)
    queue = deque([0])
    while queue:
        i = queue.popleft()
        if tree.depth_of[i] >= depth:
            continue
        z = tree.nodes[i]
        for w in C.images(z).points:
            j = lookup(w)
            if j is None:
                if len(tree.nodes) >= cap:
                    tree.truncated = True
                    continue
                j = len(tree.nodes)
                tree.nodes.append(w)
                tree.depth_of.append(tree.depth_of[i] + 1)
                buckets.setdefault(key(w), []).append(j)
                queue.append(j)
            tree.edges.append((i, j))
    return tree


def read_polynomial(path) -> Polynomial:
    """Coefficient file: one "re im" pair per line, constant term first; '#' comments."""
    coeffs = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        re_ = float(parts[0])
        im_ = float(parts[1]) if len(parts) > 1 else 0.0
        coeffs.append(complex(re_, im_))
    if not coeffs:
        raise ValueError(f"no coefficients in {path}")
    return Polynomial(coeffs)


def write_polynomial(p: Polynomial, path) -> None:
    Path(path).write_text("".join(f"{c.real:.17g} {c.imag:.17g}\n" for c in p.coeffs))
