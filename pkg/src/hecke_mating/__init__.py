"""Numerical toolkit for Hecke groups, their external maps, parabolic
Blaschke products and the algebraic correspondences that mate them."""

from .complex_geom import INF, Geodesic, MoebiusMap, classify, compose, fixed_points, moebius_apply
from .hecke import HeckeGroup, IdealPolygon

__version__ = "0.1.0"

__all__ = [
    "INF",
    "Geodesic",
    "HeckeGroup",
    "IdealPolygon",
    "MoebiusMap",
    "classify",
    "compose",
    "fixed_points",
    "moebius_apply",
]
