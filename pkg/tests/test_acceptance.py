"""Acceptance criteria, one test per criterion.

Each test records a single "ACCEPT <n> PASS|FAIL <summary>" line; the lines
are printed together at the end of the pytest run (see conftest.py) and
immediately when run with -s.
"""

import math
import time

import numpy as np
import pytest

from hecke_mating import cli, raster
from hecke_mating.binvolution import (
    CODE_KMINUS,
    CODE_KPLUS,
    RANK_NONESCAPING,
    RANK_UNDECIDED,
    OutOfDomain,
    PlaneClassifier,
    Undecidable,
    boundary_involution_residual,
    classify_corr_plane,
    classify_s_plane,
    forward_branch,
    fibre_distance,
    validate,
    write_instance,
)
from hecke_mating.blaschke import (
    BlaschkeMap,
    Petal,
    arc_invariance_residual,
    curves_nested,
    dividing_arcs,
    fatou_attracting,
)
from hecke_mating.correspondence import Correspondence, Polynomial, cov0
from hecke_mating.external import (
    DomainError,
    ExternalMap,
    circle_winding,
    parabolic_fit,
    semiconjugacy,
)
from hecke_mating.hecke import HeckeGroup, alpha_types, group_residuals, polygon_contains
from hecke_mating.complex_geom import fixed_points

RESULTS = []
SEED = 20261016


def record(n, ok, summary):
    line = f"ACCEPT {n} {'PASS' if ok else 'FAIL'} {summary}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# --- 1 ---


def test_group_algebra():
    t0 = time.perf_counter()
    worst, types_ok = 0.0, True
    for d in range(2, 7):
        g = HeckeGroup(d)
        worst = max(worst, max(group_residuals(g).values()))
        kinds = alpha_types(g)
        types_ok &= kinds[0] == "parabolic" and kinds[-1] == "parabolic"
        types_ok &= abs(fixed_points(g.alpha(1))[0] - 1) < 1e-10
        types_ok &= abs(fixed_points(g.alpha(d))[0] - g.omega) < 1e-10
    dt = time.perf_counter() - t0
    record(1, worst < 1e-10 and types_ok and dt < 1,
           f"group algebra d=2..6: max relation residual {worst:.1e}, alpha_1/alpha_d parabolic={types_ok}, {dt:.2f} s")


# --- 2 ---


def base_interior(g, n, rng):
    base = g.base_polygon()
    out = []
    while len(out) < n:
        z = complex(*rng.uniform(-1, 1, 2))
        if abs(z) < 1 and polygon_contains(g, base, z):
            out.append(z)
    return out


def test_tessellation():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    overlaps, vert_err, counts_ok, n_tiles = 0, 0.0, True, []
    for d in (2, 3):
        g = HeckeGroup(d)
        counts_ok &= len(g.tessellation(1)) == 1 + (d + 1)
        tiles = g.tessellation(3)
        n_tiles.append(len(tiles))
        samples = base_interior(g, 100, rng)
        for p in tiles:
            vert_err = max(vert_err, float(np.abs(np.abs(np.array(p.vertices)) - 1).max()))
        for a, p in enumerate(tiles):
            for z in (p.transform(w) for w in samples):
                overlaps += sum(polygon_contains(g, q, z) for b, q in enumerate(tiles) if b != a)
    dt = time.perf_counter() - t0
    ok = overlaps == 0 and vert_err < 1e-10 and counts_ok and dt < 5
    record(2, ok, f"tessellation depth 3, d=2,3 ({n_tiles} tiles): {overlaps} overlapping samples, "
                  f"vertex radius error {vert_err:.1e}, depth-1 count ok={counts_ok}, {dt:.2f} s")


# --- 3 ---


def test_external_maps():
    t0 = time.perf_counter()
    wind_ok, fix, crit, invol, conj, used = True, 0.0, 0.0, 0.0, 0.0, 0
    for d in (2, 3, 4):
        h, f = ExternalMap("hecke", d), ExternalMap("farey", d)
        wind_ok &= circle_winding(h) == d and circle_winding(f) == d
        fix = max(fix, abs(h(1) - 1), abs(f(1) - 1))
        crit = max(crit, abs(f(f.theta1(f.group.sigma(0)))))
        (curve,) = f.filled_boundary(400)
        pts = curve[5:-5]
        invol = max(invol, max(abs(f(f(u)) - u) for u in pts))
        t = 2 * np.pi * (np.arange(1000) + 0.5) / 1000
        brk = np.angle(np.array(f.circle_breakpoints()))
        for x in t:
            if np.min(np.abs(np.angle(np.exp(1j * (x - brk))))) < 1e-3:
                continue
            u = complex(np.exp(1j * x))
            try:
                r = abs(semiconjugacy(f, f(u)) - h(semiconjugacy(f, u)))
            except DomainError:
                continue
            conj, used = max(conj, r), used + 1
    dt = time.perf_counter() - t0
    ok = wind_ok and fix < 1e-10 and crit < 1e-8 and invol < 1e-8 and conj < 1e-8 and dt < 10
    record(3, ok, f"external maps d=2,3,4: winding=d {wind_ok}, |H(1)-1|,|F(1)-1| {fix:.1e}, "
                  f"critical value {crit:.1e}, F o F {invol:.1e}, conjugacy {conj:.1e} on {used} samples, {dt:.2f} s")


# --- 4 ---


def test_parabolic_asymptotics():
    rows, ok = [], True
    for kind in ("hecke", "farey"):
        for d in (2, 3, 4):
            top, bottom = parabolic_fit(ExternalMap(kind, d))
            for fit in (top, bottom):
                decades = math.log10(fit.radii.max() / fit.radii.min())
                decreasing = bool(np.all(np.diff(fit.remainders) < 0))
                ok &= fit.coefficient > 0 and abs(fit.slope - 1) < 0.05 and decades >= 3 and decreasing
            rows.append(f"{kind}{d} a={top.coefficient:.6f} b={bottom.coefficient:.6f} "
                        f"slopes {top.slope:.3f}/{bottom.slope:.3f}")
    record(4, ok, "parabolic fits: " + "; ".join(rows))


# --- 5 ---


def test_blaschke():
    t0 = time.perf_counter()
    fix = dfix = circ = schwarz = abel = arcs = 0.0
    inv_bad = 0
    t = np.exp(2j * np.pi * np.arange(1000) / 1000)
    rng = np.random.default_rng(SEED)
    z = rng.uniform(-2, 2, 1000) + 1j * rng.uniform(-2, 2, 1000)
    z = z[np.abs(np.abs(z) - 1) > 1e-2]
    for d in (2, 3, 4):
        B = BlaschkeMap(d)
        fix = max(fix, abs(B(1) - 1))
        dfix = max(dfix, abs(B.derivative(1) - 1))
        circ = max(circ, float(np.abs(np.abs(B(t)) - 1).max()))
        schwarz = max(schwarz, float(np.abs(B(1 / np.conj(z)) - 1 / np.conj(B(z))).max()))
        P = Petal(B)
        pts = P.interior_samples(1000, seed=SEED)
        inv_bad += int(np.sum(~P.contains(B(pts))))
        phi = fatou_attracting(B, pts, expansion=P.expansion)
        abel = max(abel, float(np.abs(fatou_attracting(B, B(pts), expansion=P.expansion) - phi - 1).max()))
        if d < 4:
            da = dividing_arcs(B, 2.0, 400, petal=P)
            for arc in (da.gamma_plus, da.gamma_minus):
                arcs = max(arcs, arc_invariance_residual(B, arc, skip_tail=64))
    dt = time.perf_counter() - t0
    ok = fix < 1e-12 and dfix < 1e-9 and circ < 1e-12 and schwarz < 1e-10 and inv_bad == 0 and abel < 1e-6 and arcs < 1e-6 and dt < 30
    record(5, ok, f"Blaschke d=2,3,4: |B(1)-1| {fix:.1e}, |B'(1)-1| {dfix:.1e}, circle {circ:.1e}, Schwarz {schwarz:.1e}, "
                  f"petal escapes {inv_bad}/3000, Abel {abel:.1e}, arcs (d=2,3) {arcs:.1e}, {dt:.1f} s")


# --- 6 ---


def test_correspondence_engine():
    rng = np.random.default_rng(SEED)
    count_ok, sym, eq_bad, defl = True, 0.0, 0, 0.0
    tol = 1e-8
    for deg in range(3, 9):
        f = Polynomial(rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1))
        G = Correspondence("cov_after_j", f)
        for z in rng.normal(size=1000) + 1j * rng.normal(size=1000):
            s = cov0(f, z)
            count_ok &= len(s) == deg - 1
            for w in s.points:
                sym = max(sym, float(np.abs(cov0(f, w).finite() - z).min()))
            x = 1 / z
            for w in G.images(z).points:
                if abs(f(w) - f(x)) >= tol * (1 + abs(f(w))) or abs(w - x) <= tol:
                    eq_bad += 1
            q = np.array(f.deflate(x).coeffs)
            prod = np.convolve(q[::-1], [1, -x])[::-1]
            target = np.array(f.coeffs)
            target[0] -= f(x)
            defl = max(defl, float(np.abs(prod - target).max() / max(1.0, np.abs(target).max())))
    ok = count_ok and sym < 1e-8 and eq_bad == 0 and defl < 1e-10
    record(6, ok, f"Cov0 degrees 3..8 x 1000 points: branch count ok={count_ok}, symmetry {sym:.2e}, "
                  f"fibre residual failures {eq_bad}, deflation {defl:.1e}")


# --- 7 ---

VIEW_S = raster.Viewport(-1.1 + 0j, 6.0, 512, 512)
VIEW_CORR = raster.Viewport(0j, 4.0, 512, 512)


def test_b_involution(instance):
    rep = validate(instance)
    ss = boundary_involution_residual(instance, 1000)
    z = instance.disc.interior_samples(1000, seed=SEED)
    agree = contra = undec = 0
    for x in z:
        try:
            dist = fibre_distance(instance, x)
        except (Undecidable, OutOfDomain):
            undec += 1
            continue
        if dist < 1e-6:
            agree += 1
        else:
            contra += 1
    codes = classify_corr_plane(instance, z, 40)
    kp = z[codes == CODE_KPLUS]
    kbad = 0
    for x in kp:
        try:
            w = forward_branch(instance, x)
        except Undecidable:
            continue
        if classify_corr_plane(instance, np.array([w]), 40)[0] not in (CODE_KPLUS, RANK_UNDECIDED):
            kbad += 1
    flips = 0
    for v, plane in ((VIEW_S, "s"), (VIEW_CORR, "corr")):
        lo, _ = raster.classify_grid(PlaneClassifier(instance, 30, plane), v)
        hi, _ = raster.classify_grid(PlaneClassifier(instance, 60, plane), v)
        changed = lo != hi
        flips += int(np.sum(changed & ~np.isin(lo, (RANK_NONESCAPING, RANK_UNDECIDED, CODE_KPLUS, CODE_KMINUS))))
    ok = rep.ok and ss < 1e-6 and agree >= 990 and contra == 0 and kbad == 0 and flips == 0
    record(7, ok, f"B-involution: validation {'pass' if rep.ok else 'FAIL'}, S o S {ss:.1e}, "
                  f"images vs S-fibre {agree}/1000 ({undec} undecided, {contra} contradictions), "
                  f"K+ invariance {len(kp)} points {kbad} contradictions, refinement 30->60 bad flips {flips}")


# --- 8 ---


def test_rendering(instance, tmp_path):
    big = raster.Viewport(-1.1 + 0j, 6.0, 1024, 1024)
    t0 = time.perf_counter()
    raster.render(PlaneClassifier(instance, 40, "s"), big, workers=1)
    dt = time.perf_counter() - t0
    v = raster.Viewport(-1.1 + 0j, 6.0, 384, 384)
    imgs = {w: raster.render(PlaneClassifier(instance, 40, "corr"), v, workers=w).tobytes() for w in (1, 4, 8)}
    same_workers = imgs[1] == imgs[4] == imgs[8]
    write_instance(instance, tmp_path / "i.txt")
    files = []
    for k in range(2):
        p = tmp_path / f"r{k}.ppm"
        assert cli.main(["b-involution", "--instance", str(tmp_path / "i.txt"), "--view=-1.1,0,6", "--px", "256",
                         "--max-rank", "40", "--plane", "s", "--out", str(p), "--workers", str(1 + 3 * k)]) == 0
        files.append(p.read_bytes())
    same_runs = files[0] == files[1]
    import platform
    import os

    hw = f"{platform.machine()} {platform.processor() or platform.system()}, {os.cpu_count()} CPU"
    ok = same_workers and same_runs and dt < 60
    record(8, ok, f"rendering: 1024^2 max_rank 40 single-threaded {dt:.1f} s ({hw}); "
                  f"workers 1/4/8 identical={same_workers}; repeated CLI runs identical={same_runs}")


# --- 9 ---


def ppm_sides(img):
    """Side class per pixel from the corr palette: kplus, kminus, undecided or omega."""
    pal = raster.Palette()
    px = img.pixels
    out = np.full(px.shape[:2], "omega", dtype=object)
    for name, col in (("kplus", pal.kplus), ("kminus", pal.kminus), ("undecided", pal.undecided)):
        out[np.all(px == col, axis=2)] = name
    return out


def test_figure_structure(instance, tmp_path, capsys):
    nested = {}
    for d in (2, 3, 4):
        out = tmp_path / f"b{d}.ppm"
        assert cli.main(["blaschke", "--d", str(d), "--preimages", "3", "--out", str(out), "--size", "256"]) == 0
        loops = raster.read_polylines(out.with_suffix(".txt"))
        nested[d] = len(loops) == 4 and all(curves_nested(a, b) for a, b in zip(loops, loops[1:]))
    comps = {}
    for d in (2, 3, 4):
        capsys.readouterr()
        assert cli.main(["external-map", "--kind", "hecke", "--d", str(d), "--out", str(tmp_path / f"e{d}.ppm"), "--size", "200"]) == 0
        msg = capsys.readouterr().out
        comps[d] = int(msg.split(",")[1].split()[0])
    write_instance(instance, tmp_path / "i.txt")
    out = tmp_path / "corr.ppm"
    px = 400
    assert cli.main(["b-involution", "--instance", str(tmp_path / "i.txt"), "--view", "0,0,4", "--px", str(px),
                     "--max-rank", "40", "--plane", "corr", "--out", str(out)]) == 0
    sides = ppm_sides(raster.read_ppm(out))
    v = raster.Viewport(0j, 4.0, px, px)
    pts = np.concatenate([v.row_points(r) for r in range(px)])
    mirrored = classify_corr_plane(instance, 1 / pts, 40).reshape(px, px)
    msides = np.full(mirrored.shape, "omega", dtype=object)
    msides[mirrored == CODE_KPLUS] = "kminus"
    msides[mirrored == CODE_KMINUS] = "kplus"
    msides[mirrored == RANK_UNDECIDED] = "undecided"
    decided = (sides != "undecided") & (msides != "undecided")
    rate = float(np.mean(sides[decided] == msides[decided]))
    ok = all(nested.values()) and all(comps[d] == d for d in comps) and rate >= 0.999
    record(9, ok, f"figures: blaschke 3 nested preimages d=2,3,4 {nested}; monogon preimage components {comps}; "
                  f"corr render J-symmetric on {100 * rate:.3f}% of {int(decided.sum())} decided pixels")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
