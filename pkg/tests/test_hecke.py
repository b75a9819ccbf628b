import cmath
import math

import numpy as np
import pytest

from hecke_mating.hecke import (
    HeckeGroup,
    WordError,
    alpha_types,
    group_residuals,
    interior_samples,
    polygon_contains,
    side_images,
)


def test_build_d2():
    g = HeckeGroup(2)
    assert abs(g.omega - cmath.exp(2j * math.pi / 3)) < 1e-15
    assert len(g.base_polygon().sides()) == 3


def test_fixed_points_d3():
    g = HeckeGroup(3)
    assert abs(g.alpha(1)(1) - 1) < 1e-14
    assert abs(g.alpha(3)(g.omega) - g.omega) < 1e-14


@pytest.mark.parametrize("d", range(2, 7))
def test_sigma_swaps_side_ends(d):
    g = HeckeGroup(d)
    assert abs(g.sigma(1) - g.omega) < 1e-14
    assert abs(g.sigma(g.omega) - 1) < 1e-14


@pytest.mark.parametrize("d", range(2, 7))
def test_group_relations(d):
    res = group_residuals(HeckeGroup(d))
    assert max(res.values()) < 1e-10, res


def test_alpha_types_d4():
    assert alpha_types(HeckeGroup(4)) == ["parabolic", "hyperbolic", "hyperbolic", "parabolic"]


@pytest.mark.parametrize("d", [2, 3, 5])
def test_alpha_carries_side_to_c1(d):
    g = HeckeGroup(d)
    for j in range(1, d + 1):
        assert side_images(g, j) < 1e-10


def test_words():
    g = HeckeGroup(3)
    z = 0.1 + 0.2j
    assert g.evaluate_word("", z) == z
    assert abs(g.evaluate_word("sr", 1) - 1) < 1e-14
    twice = g.evaluate_word("sr", g.evaluate_word("sr", z))
    assert abs(g.evaluate_word("srsr", z) - twice) < 1e-12
    assert g.evaluate_word("σρ", z) == pytest.approx(g.evaluate_word("sr", z))
    with pytest.raises(WordError):
        g.parse_word("sx")


def test_reduce_word():
    g = HeckeGroup(2)
    assert g.reduce_word("ss") == ""
    assert g.reduce_word("rrr") == ""
    assert g.reduce_word("rR") == ""
    z = 0.3 - 0.1j
    w = "rsrRRsr"
    assert abs(g.evaluate_word(g.reduce_word(w), z) - g.evaluate_word(w, z)) < 1e-12


def test_tessellation_counts():
    for d in (2, 3, 4):
        g = HeckeGroup(d)
        assert len(g.tessellation(0)) == 1
        assert len(g.tessellation(1)) == 1 + g.n


def test_tessellation_nested():
    g = HeckeGroup(2)
    small = {p.key() for p in g.tessellation(2)}
    big = {p.key() for p in g.tessellation(3)}
    assert small <= big


def test_tessellation_ideal_vertices():
    for p in HeckeGroup(3).tessellation(3):
        assert np.abs(np.abs(np.array(p.vertices)) - 1).max() < 1e-10


def test_fundamental_domain():
    g = HeckeGroup(2)
    assert g.in_fundamental_domain(0)
    assert g.in_fundamental_domain(g.side(1).point(0.5))
    inner = interior_samples(g)[3]
    assert g.in_fundamental_domain(inner)
    outside = g.sigma(inner)
    assert not g.in_fundamental_domain(outside)


def test_region_index():
    g = HeckeGroup(2)
    assert g.region_index(0) == 0
    mid = cmath.exp(1j * math.pi / g.n)
    z = 0.99 * mid
    assert g.region_index(z) == 1
    assert g.region_index(g.rho(z)) == 2


@pytest.mark.parametrize("d", [2, 3, 4])
def test_alpha_maps_region_off_d1(d, rng):
    g = HeckeGroup(d)
    for j in range(1, d + 1):
        src = d + 2 - j
        c, r = g.side_circle(src)
        hits = 0
        while hits < 100:
            z = complex(*rng.uniform(-1, 1, 2))
            if abs(z) >= 1 or abs(z - c) >= r:
                continue
            hits += 1
            assert g.region_index(g.alpha(j)(z)) != 1


def test_polygon_contains_base():
    g = HeckeGroup(3)
    base = g.base_polygon()
    for z in interior_samples(g):
        assert polygon_contains(g, base, z)
    assert not polygon_contains(g, base, 0.99 * cmath.exp(1j * math.pi / g.n))
