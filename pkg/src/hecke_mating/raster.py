"""Per-pixel rendering, curve overlays and bit-exact PPM output.

Classifiers are batch callables: a 1-D complex array of pixel centres in,
an int array of verdict codes out (>= 0 rank, -1 non-escaping, -2
undecided, -3 K+, -4 K-).  Rows are split statically between worker
threads, so the bytes never depend on the worker count.
"""

from __future__ import annotations

import colorsys
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .complex_geom import INF

UNDECIDED = -2


@dataclass(frozen=True)
class Viewport:
    center: complex
    width: float
    px: int
    py: int

    def __post_init__(self):
        if self.width <= 0 or self.px < 1 or self.py < 1:
            raise ValueError("viewport needs positive width and pixel counts")
        object.__setattr__(self, "center", complex(self.center))

    @property
    def height(self) -> float:
        return self.width * self.py / self.px

    def pixel_to_plane(self, i, j):
        """Centre of pixel (i, j); j counts upward from the bottom row."""
        i = np.asarray(i, dtype=float)
        j = np.asarray(j, dtype=float)
        x = ((i + 0.5) / self.px - 0.5) * self.width
        y = ((j + 0.5) / self.py - 0.5) * self.height
        return self.center + (x + 1j * y)

    def plane_to_pixel(self, z):
        """Fractional (i, j) with pixel centres at integers."""
        z = np.asarray(z, dtype=complex) - self.center
        i = (z.real / self.width + 0.5) * self.px - 0.5
        j = (z.imag / self.height + 0.5) * self.py - 0.5
        return i, j

    def row_points(self, r: int) -> np.ndarray:
        """Pixel centres of image row r (row 0 is the top of the picture)."""
        return self.pixel_to_plane(np.arange(self.px), self.py - 1 - r)


@dataclass
class ImageBuffer:
    pixels: np.ndarray  # (height, width, 3) uint8, row 0 at the top
    errors: int = field(default=0, compare=False)

    @classmethod
    def blank(cls, width: int, height: int, color=(255, 255, 255)) -> ImageBuffer:
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[:] = color
        return cls(px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def tobytes(self) -> bytes:
        return np.ascontiguousarray(self.pixels).tobytes()

    def copy(self) -> ImageBuffer:
        return ImageBuffer(self.pixels.copy(), self.errors)

    def __eq__(self, other):
        return isinstance(other, ImageBuffer) and self.pixels.shape == other.pixels.shape and self.tobytes() == other.tobytes()


def _hue_table(n: int = 16) -> np.ndarray:
    """Hues stepped by 5/16 of a turn so consecutive ranks contrast."""
    out = []
    for k in range(n):
        r, g, b = colorsys.hsv_to_rgb((5 * k % n) / n, 0.45 + 0.25 * (k % 2), 0.97 - 0.12 * (k % 3 == 2))
        out.append((round(255 * r), round(255 * g), round(255 * b)))
    return np.array(out, dtype=np.uint8)


@dataclass(frozen=True)
class Palette:
    hues: tuple = tuple(map(tuple, _hue_table().tolist()))
    nonescaping: tuple = (0, 0, 0)
    kplus: tuple = (20, 40, 140)
    kminus: tuple = (150, 25, 30)
    undecided: tuple = (128, 128, 128)

    def colors(self, codes: np.ndarray) -> np.ndarray:
        codes = np.asarray(codes)
        out = np.empty(codes.shape + (3,), dtype=np.uint8)
        hues = np.array(self.hues, dtype=np.uint8)
        ranked = codes >= 0
        out[ranked] = hues[codes[ranked] % len(hues)]
        out[codes == -1] = self.nonescaping
        out[codes == UNDECIDED] = self.undecided
        out[codes == -3] = self.kplus
        out[codes == -4] = self.kminus
        out[codes < -4] = self.undecided
        return out


def pointwise(fn):
    """Batch classifier from a per-point one.  fn may return an int code or
    anything with a ``code`` attribute; exceptions become Undecided."""

    def batch(pts):
        out = np.empty(len(pts), dtype=np.int64)
        errors = 0
        for k, z in enumerate(pts):
            try:
                v = fn(complex(z))
                out[k] = v.code if hasattr(v, "code") else int(v)
            except Exception:
                out[k] = UNDECIDED
                errors += 1
        batch.errors += errors
        return out

    batch.errors = 0
    return batch


def _row_blocks(n_rows: int, workers: int) -> list:
    base, extra = divmod(n_rows, workers)
    out, start = [], 0
    for w in range(workers):
        stop = start + base + (1 if w < extra else 0)
        if stop > start:
            out.append((start, stop))
        start = stop
    return out


def classify_grid(classify, v: Viewport, workers: int = 1) -> tuple[np.ndarray, int]:
    """Verdict codes for every pixel, shape (py, px), row 0 at the top.

    A classifier that raises on a row is retried pixel by pixel; pixels that
    still raise are Undecided and counted.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    codes = np.empty((v.py, v.px), dtype=np.int32)
    errors = np.zeros(v.py, dtype=np.int64)

    def do_rows(block):
        for r in range(*block):
            pts = v.row_points(r)
            try:
                codes[r] = classify(pts)
            except Exception:
                for i, z in enumerate(pts):
                    try:
                        codes[r, i] = np.asarray(classify(np.array([z])))[0]
                    except Exception:
                        codes[r, i] = UNDECIDED
                        errors[r] += 1

    blocks = _row_blocks(v.py, workers)
    if workers == 1:
        for b in blocks:
            do_rows(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(do_rows, blocks))
    return codes, int(errors.sum())


def render(classify, v: Viewport, workers: int = 1, palette: Palette | None = None) -> ImageBuffer:
    codes, errors = classify_grid(classify, v, workers)
    img = ImageBuffer((palette or Palette()).colors(codes))
    img.errors = errors + getattr(classify, "errors", 0)
    return img


# --- curves ---


def _clip(x0, y0, x1, y1, xmax, ymax):
    """Liang-Barsky clip of a segment to [0, xmax] x [0, ymax]; None if outside."""
    dx, dy = x1 - x0, y1 - y0
    t0, t1 = 0.0, 1.0
    for p, q in ((-dx, x0), (dx, xmax - x0), (-dy, y0), (dy, ymax - y0)):
        if p == 0:
            if q < 0:
                return None
            continue
        t = q / p
        if p < 0:
            if t > t1:
                return None
            t0 = max(t0, t)
        else:
            if t < t0:
                return None
            t1 = min(t1, t)
    return x0 + t0 * dx, y0 + t0 * dy, x0 + t1 * dx, y0 + t1 * dy


def _bresenham(x0: int, y0: int, x1: int, y1: int):
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    xs, ys = [], []
    while True:
        xs.append(x0)
        ys.append(y0)
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy
    return xs, ys


def _finite_runs(curve):
    """Split a polyline at INF / non-finite points."""
    run = []
    for z in curve:
        if z is INF or not np.isfinite(z):
            if len(run) > 0:
                yield np.array(run, dtype=complex)
            run = []
        else:
            run.append(complex(z))
    if run:
        yield np.array(run, dtype=complex)


def draw_polylines(img: ImageBuffer, curves, v: Viewport, color=(0, 0, 0), closed: bool = False) -> ImageBuffer:
    """Draw each polyline with Bresenham segments clipped to the viewport (in place)."""
    if img.width != v.px or img.height != v.py:
        raise ValueError("image and viewport sizes differ")
    xmax, ymax = v.px - 1, v.py - 1
    for curve in curves:
        for run in _finite_runs(curve):
            if closed and len(run) > 2:
                run = np.concatenate([run, run[:1]])
            fi, fj = v.plane_to_pixel(run)
            if len(run) == 1:
                i, j = round(float(fi[0])), round(float(fj[0]))
                if 0 <= i <= xmax and 0 <= j <= ymax:
                    img.pixels[ymax - j, i] = color
                continue
            for k in range(len(run) - 1):
                seg = _clip(float(fi[k]), float(fj[k]), float(fi[k + 1]), float(fj[k + 1]), xmax, ymax)
                if seg is None:
                    continue
                xs, ys = _bresenham(*(int(math.floor(c + 0.5)) for c in seg))
                img.pixels[ymax - np.array(ys), np.array(xs)] = color
    return img


def draw_points(img: ImageBuffer, pts, v: Viewport, color=(0, 0, 0)) -> ImageBuffer:
    return draw_polylines(img, [[z] for z in pts], v, color)


def circle(center: complex = 0j, radius: float = 1.0, n: int = 1024) -> np.ndarray:
    return center + radius * np.exp(2j * np.pi * np.arange(n + 1) / n)


# --- files ---


def write_ppm(img: ImageBuffer, path) -> None:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    try:
        Path(path).write_bytes(header + img.tobytes())
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e


def read_ppm(path) -> ImageBuffer:
    data = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P6" or int(fields[3]) != 255:
        raise ValueError(f"{path}: not an 8-bit P6 file")
    w, h = int(fields[1]), int(fields[2])
    body = data[pos + 1 : pos + 1 + 3 * w * h]
    if len(body) != 3 * w * h:
        raise ValueError(f"{path}: truncated pixel data")
    return ImageBuffer(np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3).copy())


def write_polylines(curves, path) -> None:
    """One "re im" per line at 15 significant digits, blank line between curves."""
    blocks = []
    for c in curves:
        blocks.append("\n".join(f"{z.real:.15g} {z.imag:.15g}" for z in np.asarray(c, dtype=complex)))
    Path(path).write_text("\n\n".join(blocks) + "\n")


def read_polylines(path) -> list:
    curves, cur = [], []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            if cur:
                curves.append(np.array(cur))
            cur = []
            continue
        re_, im_ = line.split()
        cur.append(complex(float(re_), float(im_)))
    if cur:
        curves.append(np.array(cur))
    return curves


def write_polygon_angles(polygons, path) -> None:
    """One polygon per line: its vertex angles (radians, counter-clockwise, 15 digits)."""
    lines = [" ".join(f"{a:.15g}" for a in p.angles()) for p in polygons]
    Path(path).write_text("\n".join(lines) + "\n")
