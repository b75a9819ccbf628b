import numpy as np
import pytest

from hecke_mating.binvolution import (
    CODE_KMINUS,
    CODE_KPLUS,
    RANK_NONESCAPING,
    RANK_UNDECIDED,
    BInvolutionData,
    JordanDisc,
    OutOfDomain,
    PlaneClassifier,
    TileClassification,
    Undecidable,
    boundary_involution_residual,
    check_fibre_agreement,
    classify_corr_plane,
    classify_corr_point,
    classify_s_plane,
    eval_S,
    forward_branch,
    injectivity_witness,
    fibre_distance,
    read_instance,
    tile_rank,
    validate,
    write_instance,
)
from hecke_mating.correspondence import Polynomial, poly_roots


def test_shipped_instance_validates(instance):
    report = validate(instance)
    assert report.ok, "\n".join(report.lines())
    for line in report.lines():
        assert line.startswith("CHECK ") and " PASS" in line


def test_j_asymmetric_boundary_flagged(instance):
    disc = JordanDisc.radial(lambda phi: 0.1 * np.sin(phi) ** 2)
    bad = BInvolutionData(instance.Q, disc, (1,))
    report = validate(bad, n_samples=500)
    assert not report["j_symmetry"].passed
    assert report["plus_minus_one"].passed


def test_cube_not_injective():
    data = BInvolutionData(Polynomial([0, 0, 0, 1]), JordanDisc.radial(lambda phi: 0 * phi), (1,))
    report = validate(data, n_samples=500)
    assert not report["injectivity"].passed
    assert not report.ok


def test_disc_membership():
    disc = JordanDisc.radial(lambda phi: 0 * phi, 1024)
    assert disc.star
    assert disc.side(0.5j) == 1 and disc.side(1.5) == -1 and disc.side(1.0) == 0
    assert disc.signed_area() > 0
    assert disc.crossing() is None
    bow = JordanDisc([0, 1 + 1j, 1, 1j])
    assert not bow.star and bow.crossing() is not None


def test_eval_S_round_trip(instance):
    z = instance.disc.interior_samples(200, seed=3)
    z = z[np.abs(z) < 0.9]
    for x in z:
        assert abs(eval_S(instance, instance.Q(x)) - instance.Q(1 / x)) < 1e-8 * (1 + abs(instance.Q(1 / x)))


def test_eval_S_singular_point_fixed(instance):
    s = instance.singular[0]
    assert abs(eval_S(instance, s, strict=False) - s) < 1e-6


def test_eval_S_errors(instance):
    with pytest.raises(OutOfDomain):
        eval_S(instance, 5.0)
    with pytest.raises(Undecidable):
        eval_S(instance, instance.Q(-1))


def test_boundary_involution(instance):
    assert boundary_involution_residual(instance, 1000) < 1e-6


def test_tile_rank_examples(instance):
    assert tile_rank(instance, 5.0, 10) == TileClassification("rank", 0)
    assert tile_rank(instance, instance.singular[0], 10).verdict == "undecided"
    with pytest.raises(ValueError):
        tile_rank(instance, 0.1, -1)


def test_rank_stability(instance, rng):
    u = instance.Q(instance.disc.interior_samples(300, seed=11))
    a = classify_s_plane(instance, u, 20)
    b = classify_s_plane(instance, u, 40)
    decided = (a >= 0) & (a < 20)
    assert np.array_equal(a[decided], b[decided])


def test_grid_census(instance):
    U = instance.u_boundary()
    x = np.linspace(U.real.min(), U.real.max(), 256)
    y = np.linspace(U.imag.min(), U.imag.max(), 256)
    codes = classify_s_plane(instance, (x[None, :] + 1j * y[:, None]).ravel(), 50)
    assert np.mean(codes == RANK_NONESCAPING) > 0


def test_kernel_matches_reference(instance, rng):
    # the compiled batch route and the per-point Python route agree
    z = instance.disc.interior_samples(150, seed=4)
    u = np.concatenate([instance.Q(z), rng.uniform(-4, 2, 50) + 1j * rng.uniform(-3, 3, 50)])
    fast = classify_s_plane(instance, u, 30)
    slow = [tile_rank(instance, x, 30).code for x in u]
    assert fast.tolist() == slow
    w = np.concatenate([z, 1 / z[:50], rng.uniform(-2, 2, 50) + 1j * rng.uniform(-2, 2, 50)])
    fast = classify_corr_plane(instance, w, 30)
    slow = [classify_corr_point(instance, x, 30).code for x in w]
    assert fast.tolist() == slow


def test_plane_classifier(instance):
    pts = np.array([0.1 + 0.1j, 3 + 0j])
    assert PlaneClassifier(instance, 10, "s")(pts).tolist() == classify_s_plane(instance, pts, 10).tolist()
    with pytest.raises(ValueError):
        PlaneClassifier(instance, 10, "x")(pts)


def test_corr_j_symmetry(instance, rng):
    z = rng.uniform(-1.5, 1.5, 400) + 1j * rng.uniform(-1.5, 1.5, 400)
    z = z[np.abs(z) > 0.05]
    a = classify_corr_plane(instance, z, 30)
    b = classify_corr_plane(instance, 1 / z, 30)
    # ranks shift by one under J (Q(J z) = S(Q z)); the side classes mirror
    side = {CODE_KPLUS: "kplus", CODE_KMINUS: "kminus"}
    mirror = {"kplus": "kminus", "kminus": "kplus", "omega": "omega"}
    decided = (a != RANK_UNDECIDED) & (b != RANK_UNDECIDED)
    agree = [mirror[side.get(x, "omega")] == side.get(y, "omega") for x, y in zip(a[decided], b[decided])]
    assert decided.sum() > 300
    assert np.mean(agree) >= 0.999


def test_corr_classification_sides(instance):
    z = instance.disc.interior_samples(2000, seed=9)
    codes = classify_corr_plane(instance, z, 40)
    assert set(codes.tolist()) <= set(range(0, 100)) | {CODE_KPLUS, RANK_UNDECIDED}
    assert np.any(codes == CODE_KPLUS)
    zp = z[codes == CODE_KPLUS][0]
    assert classify_corr_point(instance, zp, 40).side == "kplus"
    assert classify_corr_point(instance, 1 / zp, 40).side == "kminus"


def test_rank_zero_sheets(instance, rng):
    t = rng.uniform(4.5, 8, 50) * np.exp(2j * np.pi * rng.random(50))
    assert np.all(classify_s_plane(instance, t, 5) == 0)
    for x in t:
        roots = poly_roots(instance.Q.shifted(x))
        assert len(roots) == instance.d + 1
        assert all(classify_corr_point(instance, r, 5).rank == 0 for r in roots.points)


def test_fibre_agreement(instance):
    z = instance.disc.interior_samples(300, seed=12)
    results = []
    for x in z:
        try:
            results.append(check_fibre_agreement(instance, x))
        except (Undecidable, OutOfDomain):
            continue
    assert len(results) >= 0.99 * len(z)
    assert all(results)


def test_fibre_agreement_multiple_root(instance):
    # J(0.5) = 2 is a critical point of Q: the comparison sees a double root
    assert fibre_distance(instance, 0.5) < 1e-6


def test_kplus_forward_invariance(instance):
    z = instance.disc.interior_samples(2000, seed=9)
    kp = z[classify_corr_plane(instance, z, 40) == CODE_KPLUS]
    assert len(kp) > 5
    for x in kp:
        try:
            w = forward_branch(instance, x)
        except Undecidable:
            continue
        assert classify_corr_plane(instance, np.array([w]), 40)[0] in (CODE_KPLUS, RANK_UNDECIDED)


def test_injectivity_witness(instance):
    rep = injectivity_witness(instance, 400, max_rank=40)
    assert rep["ok"], rep
    assert rep["nonescaping_samples"] > 0
    with pytest.raises(ValueError):
        injectivity_witness(instance, 50)


def test_instance_round_trip(instance, tmp_path):
    write_instance(instance, tmp_path / "i.txt")
    back = read_instance(tmp_path / "i.txt")
    assert back.Q == instance.Q
    assert np.array_equal(back.disc.vertices, instance.disc.vertices)
    assert back.pinch == instance.pinch and back.tol == instance.tol


def test_classification_codes():
    for code in (0, 7, RANK_NONESCAPING, RANK_UNDECIDED, CODE_KPLUS, CODE_KMINUS):
        assert TileClassification.from_code(code, "corr").code == code
    kp = TileClassification.from_code(CODE_KPLUS)
    assert kp.mirrored().code == CODE_KMINUS
    assert kp.mirrored().mirrored() == kp


def test_tiling_set_open(instance):
    # neighbours of a rank-k point at small pitch have rank <= k + 1, never
    # non-escaping; at pitch 1e-3 this fails next to the limit set
    u = instance.Q(instance.disc.interior_samples(2000, seed=3))
    c = classify_s_plane(instance, u, 40)
    keep = (c >= 0) & (c < 39)
    u, c = u[keep], c[keep]
    for off in (1e-6, -1e-6, 1e-6j, -1e-6j):
        cn = classify_s_plane(instance, u + off, 40)
        assert np.all(((cn >= 0) & (cn <= c + 1)) | (cn == RANK_UNDECIDED))
