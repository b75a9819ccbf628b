"""B-involutions S = Q o J o (Q restricted to the closed disc D)^-1.

The disc D is a closed polyline symmetric under J(z) = 1/z.  Q is a
polynomial injective on the closure of D whose critical points on the
boundary form the pinch set P (fixed by J).  U = Q(D) and the singular set
is Q(P).  Points of the dynamical plane get a tile rank (first exit from
the closure of U under S); points of the correspondence plane are sorted
into Omega (escaping), K+ (non-escaping, in the closure of D) and K-.

Two routes are provided: a plain Python reference built on poly_roots, and
compiled batch classifiers used for rendering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .correspondence import Correspondence, ImageSet, Polynomial, cov0, poly_roots

BAND = 1e-6
SINGULAR_BAND = 1e-4

RANK_UNDECIDED = kernels.UNDECIDED
RANK_NONESCAPING = kernels.NONESCAPING
CODE_KPLUS = kernels.KPLUS
CODE_KMINUS = kernels.KMINUS


class OutOfDomain(ValueError):
    """u is not in the closure of U: no Q-preimage in the closed disc."""


class Undecidable(ArithmeticError):
    """The preimage lies in the boundary band, or several candidates exist."""


@dataclass(frozen=True)
class TileClassification:
    verdict: str  # "rank" | "nonescaping" | "undecided"
    rank: int | None = None
    side: str | None = None  # "omega" | "kplus" | "kminus" on the correspondence plane

    @property
    def code(self) -> int:
        if self.verdict == "rank":
            return self.rank
        if self.verdict == "undecided":
            return RANK_UNDECIDED
        if self.side == "kplus":
            return CODE_KPLUS
        if self.side == "kminus":
            return CODE_KMINUS
        return RANK_NONESCAPING

    @classmethod
    def from_code(cls, code: int, plane: str = "s") -> TileClassification:
        code = int(code)
        if code >= 0:
            return cls("rank", code, "omega" if plane == "corr" else None)
        if code == RANK_UNDECIDED:
            return cls("undecided")
        if code == CODE_KPLUS:
            return cls("nonescaping", side="kplus")
        if code == CODE_KMINUS:
            return cls("nonescaping", side="kminus")
        return cls("nonescaping")

    def mirrored(self) -> TileClassification:
        swap = {"kplus": "kminus", "kminus": "kplus"}
        return TileClassification(self.verdict, self.rank, swap.get(self.side, self.side))


class JordanDisc:
    """Closed counter-clockwise polyline with a banded membership test."""

    def __init__(self, vertices, band: float = BAND):
        v = np.asarray(vertices, dtype=complex)
        if v.ndim != 1 or len(v) < 3:
            raise ValueError("need at least three vertices")
        self.vertices = v
        self.band = band
        ang = np.angle(v)
        start = int(np.argmin(ang))
        rolled = np.roll(v, -start)
        rang = np.roll(ang, -start)
        # star-shaped about 0 with monotone arguments: fast membership
        self.star = bool(np.all(np.diff(rang) > 0) and not np.any(rolled == 0))
        self._poly = rolled if self.star else v.copy()
        self._angles = rang if self.star else np.zeros(1)

    def __len__(self):
        return len(self.vertices)

    @classmethod
    def radial(cls, log_radius, n: int = 4096, band: float = BAND) -> JordanDisc:
        """Boundary r(phi) = exp(log_radius(phi)); vertex 0 sits at phi = 0."""
        phi = 2 * np.pi * np.arange(n) / n
        return cls(np.exp(log_radius(phi)) * np.exp(1j * phi), band)

    def side(self, z, band: float | None = None):
        """+1 inside, -1 outside, 0 within the band of the boundary."""
        band = self.band if band is None else band
        pts = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty(len(pts), dtype=np.int64)
        kernels.side_block(self._poly, self._angles, self.star, pts, band, out)
        return int(out[0]) if np.ndim(z) == 0 else out.reshape(np.shape(z))

    def signed_area(self) -> float:
        v = self.vertices
        w = np.roll(v, -1)
        return 0.5 * float(np.sum(v.real * w.imag - w.real * v.imag))

    def crossing(self):
        i, j = kernels.first_crossing(self.vertices)
        return None if i < 0 else (int(i), int(j))

    def distance(self, z) -> float:
        return kernels.max_polyline_distance(np.atleast_1d(np.asarray(z, dtype=complex)), self.vertices)

    def arc_length_from(self, index: int) -> np.ndarray:
        """Distance along the polyline from vertex ``index`` to every vertex (shorter way round)."""
        v = self.vertices
        seg = np.abs(np.roll(v, -1) - v)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        total = cum[-1]
        pos = cum[:-1] - cum[index]
        pos = np.mod(pos, total)
        return np.minimum(pos, total - pos)

    def interior_samples(self, n: int, seed: int = 0) -> np.ndarray:
        """n points strictly inside (outside the band), by rejection in the bounding box."""
        rng = np.random.default_rng(seed)
        v = self.vertices
        lo = complex(v.real.min(), v.imag.min())
        hi = complex(v.real.max(), v.imag.max())
        out = []
        while sum(len(o) for o in out) < n:
            m = 2 * n
            z = lo.real + (hi.real - lo.real) * rng.random(m) + 1j * (lo.imag + (hi.imag - lo.imag) * rng.random(m))
            out.append(z[self.side(z) > 0])
        return np.concatenate(out)[:n]


@dataclass(frozen=True)
class BInvolutionData:
    Q: Polynomial
    disc: JordanDisc
    pinch: tuple
    tol: float = BAND
    label: str = ""
    _q: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pinch", tuple(complex(p) for p in self.pinch))
        object.__setattr__(self, "_q", self.Q.highest_first())
        if self.disc.band != self.tol:
            object.__setattr__(self, "disc", JordanDisc(self.disc.vertices, self.tol))

    @property
    def d(self) -> int:
        return self.Q.degree - 1

    @property
    def singular(self) -> tuple:
        return tuple(complex(self.Q(p)) for p in self.pinch)

    def u_boundary(self) -> np.ndarray:
        return self.Q(self.disc.vertices)

    def kernel_args(self):
        pinch_q = np.array(self.singular, dtype=complex)
        return self.disc._poly, self.disc._angles, self.disc.star, self.tol, pinch_q, SINGULAR_BAND


def _q_prime_family(c: float, d: int) -> Polynomial:
    """Q with Q(0) = 0 and Q'(z) = (z - 1)(z - c)^(d - 1)."""
    dq = np.polynomial.polynomial.polyfromroots([1.0] + [c] * (d - 1))
    return Polynomial(np.polynomial.polynomial.polyint(dq))


# --- serialization ---


def write_instance(data: BInvolutionData, path) -> None:
    lines = []
    if data.label:
        lines += [f"# {line}" for line in data.label.splitlines()]
    lines.append(f"degree {data.Q.degree}")
    lines.append("coefficients")
    lines += [f"{c.real:.17g} {c.imag:.17g}" for c in data.Q.coeffs]
    lines.append(f"boundary {len(data.disc)}")
    lines += [f"{z.real:.17g} {z.imag:.17g}" for z in data.disc.vertices]
    lines.append(f"pinch {len(data.pinch)}")
    lines += [f"{z.real:.17g} {z.imag:.17g}" for z in data.pinch]
    lines.append(f"tol {data.tol:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_instance(path) -> BInvolutionData:
    raw = Path(path).read_text().splitlines()
    label = "\n".join(line[1:].strip() for line in raw if line.startswith("#"))
    rows = [line.split("#", 1)[0].split() for line in raw]
    rows = [r for r in rows if r]
    it = iter(rows)

    def pairs(k):
        out = []
        for _ in range(k):
            r = next(it)
            out.append(complex(float(r[0]), float(r[1]) if len(r) > 1 else 0.0))
        return out

    degree = coeffs = verts = None
    pinch, tol = [], BAND
    try:
        for r in it:
            key = r[0]
            if key == "degree":
                degree = int(r[1])
            elif key == "coefficients":
                if degree is None:
                    raise ValueError("'degree' must precede 'coefficients'")
                coeffs = pairs(degree + 1)
            elif key == "boundary":
                verts = pairs(int(r[1]))
            elif key == "pinch":
                pinch = pairs(int(r[1]))
            elif key == "tol":
                tol = float(r[1])
            else:
                raise ValueError(f"unknown section {key!r}")
    except StopIteration:
        raise ValueError(f"{path}: truncated instance file") from None
    if coeffs is None or verts is None:
        raise ValueError(f"{path}: missing coefficients or boundary")
    return BInvolutionData(Polynomial(coeffs), JordanDisc(verts, tol), tuple(pinch), tol, label)


def shipped_instance(d: int = 2) -> BInvolutionData:
    path = Path(__file__).with_name("data") / f"d{d}_instance.txt"
    if not path.exists():
        raise FileNotFoundError(f"no shipped instance for d = {d}")
    return read_instance(path)


# --- validation ---


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"CHECK {self.name} {'PASS' if self.passed else 'FAIL'} {self.detail}"


@dataclass
class ValidationReport:
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list:
        return [c.line() for c in self.checks]


def injectivity_failures(data: BInvolutionData, samples: np.ndarray, skip: float = 1e-2) -> list:
    """Samples z of the closed disc with another Q-preimage of Q(z) in the closed disc.

    Samples within ``skip`` of the pinch set are ignored: there Q folds, the
    second preimage tends to z itself and sits inside the boundary band.
    """
    q = data._q
    pinch = np.array(data.pinch, dtype=complex)
    bad = []
    for z in samples:
        if len(pinch) and np.abs(pinch - z).min() < skip:
            continue
        roots = kernels.solve(kernels.deflate(q, complex(z)), 200, 1e-15)
        if np.any(data.disc.side(roots) >= 0):
            bad.append(complex(z))
    return bad


def validate(data: BInvolutionData, n_samples: int = 10_000) -> ValidationReport:
    tol = data.tol
    disc = data.disc
    v = disc.vertices
    checks = []

    checks.append(Check("degree", data.Q.degree >= 2, f"deg Q = {data.Q.degree}"))
    checks.append(Check("vertex_count", len(v) >= 1000, f"{len(v)} vertices"))

    gap = max(float(np.abs(v - s).min()) for s in (1, -1))
    checks.append(Check("plus_minus_one", gap <= tol, f"max vertex gap to +-1 = {gap:.3g}"))

    cross = disc.crossing()
    checks.append(Check("simple", cross is None, "no crossing" if cross is None else f"edges {cross[0]} and {cross[1]} cross"))

    area = disc.signed_area()
    checks.append(Check("orientation", area > 0, f"signed area = {area:.6g}"))

    if np.any(v == 0):
        checks.append(Check("j_symmetry", False, "boundary passes through 0"))
    else:
        # midpoints too, so the chord error of the polyline is seen
        pts = np.concatenate([v, 0.5 * (v + np.roll(v, -1))])
        h = max(kernels.max_polyline_distance(1 / pts, v), kernels.max_polyline_distance(pts, 1 / v))
        checks.append(Check("j_symmetry", h < tol, f"Hausdorff(J(bd D), bd D) = {h:.3g}"))

    if data.pinch:
        pd = max(disc.distance(p) for p in data.pinch)
        checks.append(Check("pinch_on_boundary", pd <= tol, f"max distance = {pd:.3g}"))
        pins = np.array(data.pinch)
        jd = max(float(np.abs(pins - 1 / p).min()) if p != 0 else math.inf for p in data.pinch)
        checks.append(Check("pinch_j_invariant", jd <= tol, f"max |J(p) - P| = {jd:.3g}"))
    else:
        checks.append(Check("pinch_on_boundary", True, "empty pinch set"))
        checks.append(Check("pinch_j_invariant", True, "empty pinch set"))

    checks.append(_critical_check(data))

    rng = np.random.default_rng(0)
    bsamp = v if len(v) <= n_samples // 2 else v[rng.choice(len(v), n_samples // 2, replace=False)]
    isamp = disc.interior_samples(n_samples - len(bsamp), seed=1)
    bad = injectivity_failures(data, np.concatenate([bsamp, isamp]))
    detail = f"{len(bad)} of {len(bsamp) + len(isamp)} closure samples share an image"
    if bad:
        detail += f" (first at {bad[0]:.6g})"
    checks.append(Check("injectivity", not bad, detail))
    return ValidationReport(checks)


def _critical_check(data: BInvolutionData, band: float = 1e-2) -> Check:
    """Q' vanishes on the boundary exactly at the pinch points."""
    dq = data.Q.derivative()
    tol = data.tol
    v = data.disc.vertices
    mids = 0.5 * (v + np.roll(v, -1))
    samp = np.concatenate([v, mids])
    pins = np.array(data.pinch, dtype=complex)
    near = np.zeros(len(samp), dtype=bool)
    for p in pins:
        near |= np.abs(samp - p) < band
    vals = np.abs(dq(samp))
    away = float(vals[~near].min()) if np.any(~near) else math.inf
    at_pins = max((abs(dq(p)) for p in pins), default=0.0)
    stray = []
    for r in poly_roots(dq).points:
        on = data.disc.distance(r) <= max(tol, 1e-9)
        matched = len(pins) and np.abs(pins - r).min() <= 1e-6
        if on and not matched:
            stray.append(r)
    ok = away >= tol and at_pins < tol and not stray
    detail = f"min |Q'| off pinch bands = {away:.3g}, max |Q'(p)| = {at_pins:.3g}, stray critical points = {len(stray)}"
    return Check("critical_set", ok, detail)


# --- the map S ---


def closure_roots(data: BInvolutionData, u: complex) -> tuple[ImageSet, np.ndarray]:
    roots = poly_roots(data.Q.shifted(u))
    sides = np.array([data.disc.side(r) for r in roots.points], dtype=int)
    return roots, sides


def inverse_in_disc(data: BInvolutionData, u: complex, strict: bool = True) -> complex:
    """The preimage of u under Q in the closed disc."""
    roots, sides = closure_roots(data, u)
    if strict and np.any(sides == 0):
        raise Undecidable(f"preimage of {u} within the boundary band")
    cand = [r for r, s in zip(roots.points, sides) if s >= 0]
    if not cand:
        raise OutOfDomain(f"{u} is outside the closure of U")
    if len(cand) > 1:
        raise Undecidable(f"{len(cand)} preimages of {u} in the closed disc")
    return complex(cand[0])


def eval_S(data: BInvolutionData, u: complex, strict: bool = True) -> complex:
    """S(u) = Q(J(x)) with x the preimage of u in the closed disc.

    strict=True refuses preimages inside the boundary band (Undecidable);
    strict=False accepts a unique preimage in the closed, banded disc, which
    is what evaluation on the boundary of U needs.
    """
    x = inverse_in_disc(data, complex(u), strict)
    if x == 0:
        raise Undecidable("preimage at 0, J undefined")
    return complex(data.Q(1 / x))


def near_singular(data: BInvolutionData, u: complex) -> bool:
    return any(abs(u - s) < SINGULAR_BAND for s in data.singular)


def tile_rank(data: BInvolutionData, u: complex, max_rank: int) -> TileClassification:
    """First exit of the S-orbit of u from the closure of U (reference route)."""
    if max_rank < 0:
        raise ValueError("max_rank must be non-negative")
    u = complex(u)
    for k in range(max_rank + 1):
        if near_singular(data, u):
            return TileClassification("undecided")
        try:
            u = eval_S(data, u)
        except OutOfDomain:
            return TileClassification("rank", k)
        except Undecidable:
            return TileClassification("undecided")
    return TileClassification("nonescaping")


def classify_corr_point(data: BInvolutionData, z: complex, max_rank: int) -> TileClassification:
    """Omega / K+ / K- verdict for a point of the correspondence plane.

    Points of the disc get one extra step so that z and J(z) are judged on
    the same stretch of orbit (Q(J(z)) = S(Q(z))).
    """
    z = complex(z)
    s = data.disc.side(z)
    if s == 0:
        return TileClassification("undecided")
    t = tile_rank(data, data.Q(z), max_rank + (1 if s > 0 else 0))
    if t.verdict == "rank":
        return TileClassification("rank", t.rank, "omega")
    if t.verdict == "undecided":
        return t
    return TileClassification("nonescaping", side="kplus" if s > 0 else "kminus")


# --- compiled batch routes ---


def classify_s_plane(data: BInvolutionData, pts, max_rank: int) -> np.ndarray:
    pts = np.ascontiguousarray(np.ravel(pts), dtype=complex)
    out = np.empty(len(pts), dtype=np.int32)
    poly, ang, star, band, pq, ptol = data.kernel_args()
    kernels.s_plane_block(data._q, pts, max_rank, poly, ang, star, band, pq, ptol, out)
    return out


def classify_corr_plane(data: BInvolutionData, pts, max_rank: int) -> np.ndarray:
    pts = np.ascontiguousarray(np.ravel(pts), dtype=complex)
    out = np.empty(len(pts), dtype=np.int32)
    poly, ang, star, band, pq, ptol = data.kernel_args()
    kernels.corr_plane_block(data._q, pts, max_rank, poly, ang, star, band, pq, ptol, out)
    return out


@dataclass(frozen=True)
class PlaneClassifier:
    """Batch classifier for the renderer: complex array -> int32 verdict codes."""

    data: BInvolutionData
    max_rank: int
    plane: str = "s"

    def __call__(self, pts) -> np.ndarray:
        if self.plane == "s":
            return classify_s_plane(self.data, pts, self.max_rank)
        if self.plane == "corr":
            return classify_corr_plane(self.data, pts, self.max_rank)
        raise ValueError(f"unknown plane {self.plane!r}")


# --- consistency checks ---


def _remove_nearest(s: ImageSet, z: complex) -> list:
    pts = s.expanded()
    k = int(np.argmin([abs(p - z) for p in pts]))
    return pts[:k] + pts[k + 1 :]


def _matching_distance(a: list, b: list) -> float:
    if len(a) != len(b):
        return math.inf
    if not a:
        return 0.0
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(np.array(a)[:, None] - np.array(b)[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def fibre_distance(data: BInvolutionData, z: complex) -> float:
    """Distance between the forward images of z under the correspondence
    Cov0(Q) o J and the solutions w != J(z) of Q(w) = S(Q(z))."""
    z = complex(z)
    images = Correspondence("cov_after_j", data.Q).images(z).expanded()
    target = eval_S(data, data.Q(z))
    other = _remove_nearest(poly_roots(data.Q.shifted(target)), 1 / z)
    return _matching_distance(images, other)


def check_fibre_agreement(data: BInvolutionData, z: complex, tol: float = 1e-6) -> bool:
    return fibre_distance(data, z) < tol


def forward_branch(data: BInvolutionData, z: complex) -> complex:
    """The image of z in the closed disc: the disc preimage of S(Q(z))."""
    z = complex(z)
    return inverse_in_disc(data, eval_S(data, data.Q(z)))


def boundary_samples(data: BInvolutionData, n: int = 1000, min_arc: float = 1e-2) -> np.ndarray:
    """n boundary vertices spread evenly, at arc distance >= min_arc from the pinch set."""
    v = data.disc.vertices
    keep = np.ones(len(v), dtype=bool)
    for p in data.pinch:
        idx = int(np.argmin(np.abs(v - p)))
        keep &= data.disc.arc_length_from(idx) >= min_arc
    cand = np.flatnonzero(keep)
    pick = cand[np.linspace(0, len(cand) - 1, min(n, len(cand))).round().astype(int)]
    return v[pick]


def boundary_involution_residual(data: BInvolutionData, n: int = 1000, min_arc: float = 1e-2) -> float:
    """max |S(S(u)) - u| over boundary samples u = Q(z) of U."""
    worst = 0.0
    for z in boundary_samples(data, n, min_arc):
        u = data.Q(z)
        worst = max(worst, abs(eval_S(data, eval_S(data, u, strict=False), strict=False) - u))
    return worst


def injectivity_witness(data: BInvolutionData, n: int = 1000, max_rank: int = 50, seed: int = 0) -> dict:
    """Q is injective on the closed disc, and non-escaping values t have one
    preimage in the disc and d outside."""
    if n < 100:
        raise ValueError("need at least 100 samples")
    rng = np.random.default_rng(seed)
    v = data.disc.vertices
    bsamp = v[rng.choice(len(v), min(len(v), n // 2), replace=False)]
    isamp = data.disc.interior_samples(n - len(bsamp), seed=seed + 1)
    bad = injectivity_failures(data, np.concatenate([bsamp, isamp]))
    codes = classify_s_plane(data, data.Q(isamp), max_rank)
    ks = data.Q(isamp[codes == RANK_NONESCAPING])
    counts = []
    for t in ks:
        roots = poly_roots(data.Q.shifted(t))
        sides = np.array([data.disc.side(r) for r in roots.points])
        mult = np.array(roots.multiplicities)
        counts.append((int(mult[sides > 0].sum()), int(mult[sides < 0].sum()), int(mult.sum())))
    split_ok = all(c == (1, data.d, data.d + 1) for c in counts)
    return {
        "samples": len(bsamp) + len(isamp),
        "collisions": len(bad),
        "nonescaping_samples": len(counts),
        "preimage_split_ok": split_ok,
        "ok": not bad and split_ok,
    }


# --- instance search ---


def census(data: BInvolutionData, n: int = 2000, max_rank: int = 40) -> float:
    """Fraction of Q-images of interior samples of the disc that never escape."""
    z = data.disc.interior_samples(n, seed=7)
    codes = classify_s_plane(data, data.Q(z), max_rank)
    return float(np.mean(codes == RANK_NONESCAPING))


def search_instance(
    d: int = 2,
    c_grid=(2.0, 2.5, 3.0, 1.75, 4.0, 1.7),
    a_grid=(0.0, 0.05, -0.05, 0.1, -0.1),
    n_vertices: int = 4096,
    tol: float = BAND,
    log=None,
) -> BInvolutionData:
    """First candidate passing validation with a non-escaping set of interior.

    Family: Q(0) = 0, Q'(z) = (z - 1)(z - c)^(d - 1) with real c > 1, and
    boundaries log r(phi) = a sin(phi), which are J-symmetric for every a
    and pass through +-1.  The pinch set is {1}.
    """
    for c in c_grid:
        for a in a_grid:
            disc = JordanDisc.radial(lambda phi, a=a: a * np.sin(phi), n_vertices, tol)
            label = (
                f"derived instance, found by search_instance(d={d}): "
                f"Q'(z) = (z - 1)(z - {c:g})^{d - 1}, Q(0) = 0, boundary log r = {a:g} sin(phi)"
            )
            data = BInvolutionData(_q_prime_family(c, d), disc, (1 + 0j,), tol, label)
            rep = validate(data)
            frac = census(data) if rep.ok else 0.0
            if log is not None:
                failed = [ch.name for ch in rep.checks if not ch.passed]
                log(f"c={c:g} a={a:g} valid={rep.ok} failed={failed} nonescaping={frac:.4f}")
            if rep.ok and frac > 0:
                return data
    raise RuntimeError("no candidate in the search grid passed")
