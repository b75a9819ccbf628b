"""Command-line entry point.

Every picture command writes a binary PPM to --out and, where there is
geometry worth keeping, a plain-text companion next to it (same name,
suffix .txt).  Exit codes: 0 success, 2 validation failure, 1 runtime error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import raster
from .blaschke import BlaschkeMap, Petal, curve_preimages, dividing_arcs, escape_times, petal_preimages
from .binvolution import (
    CODE_KMINUS,
    CODE_KPLUS,
    RANK_NONESCAPING,
    RANK_UNDECIDED,
    BInvolutionData,
    PlaneClassifier,
    read_instance,
    search_instance,
    validate,
    write_instance,
)
from .correspondence import Correspondence, orbit_tree, read_polynomial
from .external import ExternalMap, arc_components, hecke_preimage_arcs, monogon
from .hecke import HeckeGroup

GRAY = (150, 150, 150)
BLACK = (0, 0, 0)
RED = (200, 30, 30)
BLUE = (30, 60, 200)


class ValidationFailure(Exception):
    pass


def _complex_pair(text: str) -> complex:
    parts = [p for p in text.replace(",", " ").split()]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}")
    return complex(float(parts[0]), float(parts[1]))


def _view(text: str) -> tuple[complex, float]:
    parts = [p for p in text.replace(",", " ").split()]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected cx,cy,w but got {text!r}")
    cx, cy, w = map(float, parts)
    if w <= 0:
        raise argparse.ArgumentTypeError("view width must be positive")
    return complex(cx, cy), w


def _disc_view(size: int) -> raster.Viewport:
    return raster.Viewport(0j, 2.1, size, size)


def _sidecar(out: str) -> Path:
    return Path(out).with_suffix(".txt")


def _report(msg: str) -> None:
    print(msg)


# --- commands ---


def cmd_tessellate(args) -> int:
    g = HeckeGroup(args.d)
    polys = g.tessellation(args.depth)
    v = _disc_view(args.size)
    img = raster.ImageBuffer.blank(v.px, v.py)
    raster.draw_polylines(img, [raster.circle()], v, GRAY)
    curves = [side.sample(256) for p in polys for side in p.sides()]
    raster.draw_polylines(img, curves, v, BLACK)
    raster.write_ppm(img, args.out)
    raster.write_polygon_angles(polys, _sidecar(args.out))
    _report(f"{len(polys)} polygons")
    return 0


def cmd_blaschke(args) -> int:
    B = BlaschkeMap(args.d)
    P = Petal(B, args.theta0)
    v = _disc_view(args.size)

    def field(pts):
        t = escape_times(B, P, pts, args.max_iter)
        inside = np.abs(pts) < 1
        return np.where(inside, np.where(t >= 0, t, RANK_NONESCAPING), RANK_UNDECIDED)

    pal = raster.Palette(undecided=(255, 255, 255))
    img = raster.render(field, v, args.workers, pal)
    raster.draw_polylines(img, [raster.circle()], v, BLACK)
    boundary = P.boundary(args.samples)
    curves = petal_preimages(B, P, args.preimages, args.samples) if args.preimages else []
    raster.draw_polylines(img, curves, v, BLUE)
    raster.draw_polylines(img, [boundary], v, RED)
    raster.write_ppm(img, args.out)
    raster.write_polylines([boundary] + curves, _sidecar(args.out))
    _report(f"petal pulled back {P.n_pullbacks} times; {len(curves)} preimage curves")
    return 0


def cmd_dividing_arcs(args) -> int:
    B = BlaschkeMap(args.d)
    P = Petal(B)
    arcs = dividing_arcs(B, args.h, args.length, petal=P)
    level = [arcs.gamma_plus, arcs.gamma_minus]
    layers = [level]
    for _ in range(args.pullbacks):
        level = [c for arc in level for c in curve_preimages(B, arc)]
        layers.append(level)
    v = _disc_view(args.size)
    img = raster.ImageBuffer.blank(v.px, v.py)
    raster.draw_polylines(img, [raster.circle()], v, BLACK)
    raster.draw_polylines(img, [P.boundary()], v, GRAY)
    for depth, layer in reversed(list(enumerate(layers))):
        raster.draw_polylines(img, layer, v, RED if depth == 0 else BLUE)
    raster.write_ppm(img, args.out)
    raster.write_polylines([c for layer in layers for c in layer], _sidecar(args.out))
    _report(f"{sum(len(layer) for layer in layers)} arcs")
    return 0


def cmd_external_map(args) -> int:
    fmap = ExternalMap(args.kind, args.d)
    v = _disc_view(args.size)
    img = raster.ImageBuffer.blank(v.px, v.py)
    raster.draw_polylines(img, [raster.circle()], v, BLACK)
    pieces = fmap.piece_boundaries()
    raster.draw_polylines(img, pieces, v, GRAY)
    gamma = monogon(args.monogon_eps)
    curves = pieces + [gamma]
    raster.draw_polylines(img, [gamma], v, RED)
    if args.kind == "hecke":
        arcs = hecke_preimage_arcs(fmap, gamma)
        raster.draw_polylines(img, arcs, v, BLUE)
        curves += arcs
        _report(f"preimage of the monogon: {len(arcs)} arcs, {arc_components(arcs)} components")
    raster.write_ppm(img, args.out)
    raster.write_polylines(curves, _sidecar(args.out))
    return 0


def cmd_correspondence(args) -> int:
    q = read_polynomial(args.q)
    tree = orbit_tree(Correspondence("cov_after_j", q), args.z0, args.depth, cap=args.cap, merge_tol=args.tol or 1e-10)
    pts = tree.points()
    pts = pts[np.isfinite(pts)]
    if args.view is not None:
        center, width = args.view
    else:
        lo = np.percentile(pts.real, 1), np.percentile(pts.imag, 1)
        hi = np.percentile(pts.real, 99), np.percentile(pts.imag, 99)
        center = complex((lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2)
        width = 1.1 * max(hi[0] - lo[0], hi[1] - lo[1], 1e-9)
    v = raster.Viewport(center, width, args.size, args.size)
    img = raster.ImageBuffer.blank(v.px, v.py)
    raster.draw_points(img, pts, v, BLACK)
    raster.write_ppm(img, args.out)
    raster.write_polylines([[z] for z in pts], _sidecar(args.out))
    if args.edges:
        tree.write_edges(args.edges)
    _report(f"{len(tree.nodes)} nodes, {len(tree.edges)} edges" + (" (truncated)" if tree.truncated else ""))
    return 0


def _load_instance(args) -> BInvolutionData:
    data = read_instance(args.instance)
    if args.tol is not None:
        data = BInvolutionData(data.Q, data.disc, data.pinch, args.tol, data.label)
    return data


def cmd_b_involution(args) -> int:
    data = _load_instance(args)
    center, width = args.view
    v = raster.Viewport(center, width, args.px, args.px)
    classify = PlaneClassifier(data, args.max_rank, args.plane)
    codes, errors = raster.classify_grid(classify, v, args.workers)
    img = raster.ImageBuffer(raster.Palette().colors(codes), errors)
    raster.write_ppm(img, args.out)
    counts = {
        "escaping": int(np.sum(codes >= 0)),
        "nonescaping": int(np.sum(codes == RANK_NONESCAPING)),
        "kplus": int(np.sum(codes == CODE_KPLUS)),
        "kminus": int(np.sum(codes == CODE_KMINUS)),
        "undecided": int(np.sum(codes == RANK_UNDECIDED)),
    }
    _report(" ".join(f"{k}={n}" for k, n in counts.items() if args.plane == "corr" or k not in ("kplus", "kminus")))
    return 0


def cmd_validate(args) -> int:
    data = _load_instance(args)
    rep = validate(data)
    for line in rep.lines():
        print(line)
    if not rep.ok:
        raise ValidationFailure("instance failed validation")
    return 0


def cmd_search_instance(args) -> int:
    data = search_instance(args.d, n_vertices=args.vertices, tol=args.tol or 1e-6, log=_report)
    write_instance(data, args.out)
    _report(f"wrote {args.out}")
    return 0


# --- parser ---


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    dflt = argparse.SUPPRESS if suppress else None
    p.add_argument("--workers", type=int, default=argparse.SUPPRESS if suppress else 1, help="render threads (default 1)")
    p.add_argument("--tol", type=float, default=dflt, help="override the tolerance of the command")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hecke-mating", description="Hecke groups, parabolic Blaschke maps and B-involutions.")
    _global_flags(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("tessellate", cmd_tessellate, "ideal-polygon tessellation of the Hecke group")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=800)

    p = add("blaschke", cmd_blaschke, "attracting petal, its preimage curves and escape times")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--preimages", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--theta0", type=float, default=math.pi / 2)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--max-iter", type=int, default=60)
    p.add_argument("--samples", type=int, default=400, help="points per curve before pullback")

    p = add("dividing-arcs", cmd_dividing_arcs, "dividing arcs at the parabolic point and their pullbacks")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--length", type=float, default=400.0, help="extent of the arcs in the repelling coordinate")
    p.add_argument("--pullbacks", type=int, default=1)
    p.add_argument("--size", type=int, default=800)

    p = add("external-map", cmd_external_map, "piece boundaries, a monogon and its preimage")
    p.add_argument("--kind", choices=["hecke", "farey"], required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--monogon-eps", type=float, default=0.3)
    p.add_argument("--size", type=int, default=800)

    p = add("correspondence", cmd_correspondence, "orbit tree of Cov0(Q) o J as a point cloud")
    p.add_argument("--q", required=True, help="coefficient file, one 're im' per line, constant term first")
    p.add_argument("--z0", type=_complex_pair, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--edges", help="also write the edge list here")
    p.add_argument("--view", type=_view)
    p.add_argument("--size", type=int, default=800)
    p.add_argument("--cap", type=int, default=100_000)

    p = add("b-involution", cmd_b_involution, "tile ranks (plane s) or Omega/K+/K- (plane corr)")
    p.add_argument("--instance", required=True)
    p.add_argument("--view", type=_view, required=True)
    p.add_argument("--px", type=int, required=True)
    p.add_argument("--max-rank", type=int, required=True)
    p.add_argument("--plane", choices=["s", "corr"], required=True)
    p.add_argument("--out", required=True)

    p = add("validate", cmd_validate, "validation report for an instance file")
    p.add_argument("--instance", required=True)

    p = add("search-instance", cmd_search_instance, "search for a valid instance and write it")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--out", required=True)
    p.add_argument("--vertices", type=int, default=4096)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except ValidationFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
