"""Reference configurations and random generators used by the test suites."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import List, Tuple

from .geometry import LatticePolytope, standard_simplex, unit_cube
from .plfun import AffinePiece, PLConvexFunction
from .quantize import ToricTestConfig

F = Fraction


def interval(lo=0, hi=1) -> LatticePolytope:
    return LatticePolytope.from_vertices([(F(lo),), (F(hi),)])


def hexagon() -> LatticePolytope:
    return LatticePolytope.from_vertices([(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)])


def rectangle(a=2, b=1) -> LatticePolytope:
    return LatticePolytope.from_vertices([(0, 0), (a, 0), (0, b), (a, b)])


def trapezoid() -> LatticePolytope:
    # moment polytope of a Hirzebruch surface
    return LatticePolytope.from_vertices([(0, 0), (3, 0), (0, 1), (2, 1)])


def pl(*pieces) -> PLConvexFunction:
    return PLConvexFunction.from_pieces([(slope, const) for slope, const in pieces])


def kink() -> PLConvexFunction:
    """max(0, 2x - 1), the flagship one-dimensional example."""
    return pl(((0,), 0), ((2,), -1))


def standard_corpus() -> List[Tuple[str, ToricTestConfig]]:
    """Twenty-odd configurations: intervals, squares, simplices, the hexagon, a cube."""
    sq = unit_cube(2)
    tri = standard_simplex(2)
    hexa = hexagon()
    entries = [
        ("interval-kink", interval(), kink()),
        ("interval-x", interval(), pl(((1,), 0))),
        ("interval-affine", interval(), pl(((3,), -2))),
        ("interval-thirds", interval(), pl(((0,), 0), ((F(1, 2),), F(-1, 3)))),
        ("interval-triple", interval(), pl(((0,), 0), ((2,), -1), ((4,), -3))),
        ("interval-const", interval(), pl(((0,), 5))),
        ("interval-02", interval(0, 2), pl(((0,), 0), ((1,), -1), ((3,), -4))),
        ("interval-rational", interval(F(-1), F(3, 2)), pl(((-1,), 0), ((F(1, 3),), 0))),
        ("square-maxxy", sq, pl(((1, 0), 0), ((0, 1), 0))),
        ("square-corner", sq, pl(((0, 0), 0), ((1, 1), -1))),
        ("square-y", sq, pl(((0, 1), 0))),
        ("square-half", sq, pl(((1, 0), 0), ((0, 0), F(1, 2)))),
        ("simplex-cut", tri, pl(((0, 0), 0), ((1, 0), F(-1, 3)))),
        ("simplex-max", tri, pl(((1, 0), 0), ((0, 1), 0), ((0, 0), F(1, 3)))),
        ("simplex-affine", tri, pl(((2, -1), 1))),
        ("hexagon-max", hexa, pl(((0, 0), 0), ((1, 0), 0), ((0, 1), 0))),
        ("hexagon-abs", hexa, pl(((1, 0), 0), ((-1, 0), 0))),
        ("hexagon-affine", hexa, pl(((1, 1), 0))),
        ("rectangle-cut", rectangle(), pl(((0, 0), 0), ((1, 1), F(-3, 2)))),
        ("trapezoid-cut", trapezoid(), pl(((0, 0), 0), ((1, 0), -1))),
        ("cube-maxxyz", unit_cube(3), pl(((1, 0, 0), 0), ((0, 1, 0), 0), ((0, 0, 1), 0))),
        ("tetra-cut", standard_simplex(3), pl(((0, 0, 0), 0), ((1, 1, 0), F(-1, 2)))),
    ]
    return [(name, ToricTestConfig.build(P, f)) for name, P, f in entries]


def random_rational(rng: random.Random, max_num: int = 4, max_den: int = 3) -> Fraction:
    return Fraction(rng.randint(-max_num, max_num), rng.randint(1, max_den))


def random_pl_function(rng: random.Random, n: int, pieces: int = 3) -> PLConvexFunction:
    out = []
    for _ in range(pieces):
        slope = tuple(random_rational(rng) for _ in range(n))
        out.append(AffinePiece(slope, random_rational(rng)))
    return PLConvexFunction(tuple(out))


def random_affine_function(rng: random.Random, n: int) -> PLConvexFunction:
    return PLConvexFunction((AffinePiece(tuple(random_rational(rng) for _ in range(n)), random_rational(rng)),))
