"""Rational piecewise-linear convex functions on lattice polytopes.

Functions are stored in max-of-affine form.  Integration goes through the
linearity subdivision of the polytope, refined by sign where absolute
values are needed, and finally through exact monomial moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Tuple, Union

import mpmath

from ._exact import Vector, dot, fmt, frac, lcm_of_denominators, poly_affine, poly_pow, sub, vec
from .errors import ValidationError
from .geometry import (
    LatticePolytope,
    _dominance_cells,
    integrate_polynomial,
    intersect_halfspaces,
    simplex_volume,
)

__all__ = [
    "AffinePiece",
    "PLConvexFunction",
    "SignedPL",
    "Subdivision",
    "evaluate",
    "clear_denominators",
    "linearity_regions",
    "is_affine_on",
    "integrate_pl",
    "integrate_abs_power",
    "integrate_power",
    "mean_value",
    "CellTriangulation",
]


@dataclass(frozen=True)
class AffinePiece:
    """x -> <slope, x> + constant."""

    slope: Vector
    constant: Fraction

    def __post_init__(self):
        object.__setattr__(self, "slope", vec(self.slope))
        object.__setattr__(self, "constant", frac(self.constant))

    @classmethod
    def zero(cls, n: int) -> "AffinePiece":
        return cls((Fraction(0),) * n, Fraction(0))

    @property
    def dim(self) -> int:
        return len(self.slope)

    def __call__(self, x: Sequence) -> Fraction:
        return dot(self.slope, x) + self.constant

    def __add__(self, other: "AffinePiece") -> "AffinePiece":
        return AffinePiece(tuple(a + b for a, b in zip(self.slope, other.slope)), self.constant + other.constant)

    def __sub__(self, other: "AffinePiece") -> "AffinePiece":
        return AffinePiece(sub(self.slope, other.slope), self.constant - other.constant)

    def __neg__(self) -> "AffinePiece":
        return AffinePiece(tuple(-a for a in self.slope), -self.constant)

    def scale(self, m) -> "AffinePiece":
        m = frac(m)
        return AffinePiece(tuple(m * a for a in self.slope), m * self.constant)

    def shift(self, c) -> "AffinePiece":
        return AffinePiece(self.slope, self.constant + frac(c))

    def to_json(self) -> dict:
        return {"slope": [fmt(a) for a in self.slope], "constant": fmt(self.constant)}

    def __repr__(self) -> str:
        terms = ", ".join(fmt(a) for a in self.slope)
        return f"AffinePiece(slope=({terms}), constant={fmt(self.constant)})"


@dataclass(frozen=True)
class PLConvexFunction:
    """f(x) = max over pieces; convex by construction."""

    pieces: Tuple[AffinePiece, ...]

    def __post_init__(self):
        pieces = tuple(p if isinstance(p, AffinePiece) else AffinePiece(*p) for p in self.pieces)
        if not pieces:
            raise ValidationError("a PL function needs at least one affine piece")
        n = pieces[0].dim
        if any(p.dim != n for p in pieces):
            raise ValidationError("all pieces must have the same dimension")
        # duplicates would create overlapping linearity cells
        unique = []
        for p in pieces:
            if p not in unique:
                unique.append(p)
        object.__setattr__(self, "pieces", tuple(unique))

    @classmethod
    def affine(cls, slope, constant=0) -> "PLConvexFunction":
        return cls((AffinePiece(vec(slope), frac(constant)),))

    @classmethod
    def from_pieces(cls, pieces: Sequence[Tuple[Sequence, object]]) -> "PLConvexFunction":
        return cls(tuple(AffinePiece(vec(s), frac(c)) for s, c in pieces))

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    def __call__(self, x: Sequence) -> Fraction:
        return max(p(x) for p in self.pieces)

    def scale(self, m) -> "PLConvexFunction":
        m = frac(m)
        if m < 0:
            raise ValidationError("negative multiples of a convex function are not convex")
        return PLConvexFunction(tuple(p.scale(m) for p in self.pieces))

    def add_affine(self, a: AffinePiece) -> "PLConvexFunction":
        return PLConvexFunction(tuple(p + a for p in self.pieces))

    def shift(self, c) -> "PLConvexFunction":
        return PLConvexFunction(tuple(p.shift(c) for p in self.pieces))

    def prune(self, P: LatticePolytope) -> "PLConvexFunction":
        """Drop pieces never active on P."""
        return PLConvexFunction(tuple(piece for _, piece in linearity_regions(self, P).cells))

    def to_json(self) -> dict:
        return {"pieces": [p.to_json() for p in self.pieces]}

    def __repr__(self) -> str:
        return "PLConvexFunction(" + ", ".join(map(repr, self.pieces)) + ")"


@dataclass(frozen=True)
class SignedPL:
    """Difference ``plus - minus`` of two max-of-affine functions."""

    plus: PLConvexFunction
    minus: PLConvexFunction

    @property
    def dim(self) -> int:
        return self.plus.dim

    def __call__(self, x: Sequence) -> Fraction:
        return self.plus(x) - self.minus(x)


PLExpression = Union[AffinePiece, PLConvexFunction, SignedPL]


def as_signed(g: PLExpression) -> SignedPL:
    if isinstance(g, SignedPL):
        return g
    if isinstance(g, AffinePiece):
        g = PLConvexFunction((g,))
    if isinstance(g, PLConvexFunction):
        return SignedPL(g, PLConvexFunction((AffinePiece.zero(g.dim),)))
    raise TypeError(f"not a PL expression: {g!r}")


@dataclass(frozen=True)
class Subdivision:
    """Cells with disjoint interiors covering P; each carries one affine function."""

    cells: Tuple[Tuple[LatticePolytope, AffinePiece], ...]

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    @property
    def denominator(self) -> int:
        """Least q such that q * (every cell) is a lattice polytope."""
        out = 1
        for cell, _ in self.cells:
            out = math.lcm(out, cell.denominator)
        return out


def evaluate(f: PLExpression, x: Sequence) -> Fraction:
    return f(vec(x))


def clear_denominators(f: PLConvexFunction) -> Tuple[PLConvexFunction, int]:
    """Return (D * f, D) for the least D making every slope and constant integral.

    Then k * (D f)(a / k) = max_j (<D xi_j, a> + k D c_j) is an integer for
    every k >= 1 and lattice point a.
    """
    D = lcm_of_denominators(x for p in f.pieces for x in p.slope + (p.constant,))
    return f.scale(D), D


def linearity_regions(f: PLExpression, P: LatticePolytope) -> Subdivision:
    """Subdivide P into cells on which ``f`` is a single affine function.

    For a signed expression the cells are indexed by the pair of active
    pieces of ``plus`` and ``minus``.
    """
    if isinstance(f, AffinePiece):
        return Subdivision(((P, f),))
    if isinstance(f, PLConvexFunction):
        return Subdivision(tuple(_dominance_cells(P, f.pieces)))
    g = as_signed(f)
    cells = []
    for cp, pp in _dominance_cells(P, g.plus.pieces):
        for cm, pm in _dominance_cells(cp, g.minus.pieces):
            cells.append((cm, pp - pm))
    return Subdivision(tuple(cells))


def is_affine_on(f: PLExpression, P: LatticePolytope) -> bool:
    """True iff one piece attains the max on all of P (vertex dominance test)."""
    if isinstance(f, AffinePiece):
        return True
    if isinstance(f, SignedPL):
        return _signed_is_affine(f, P)
    for pj in f.pieces:
        if all(pj(v) >= pi(v) for pi in f.pieces for v in P.vertices):
            return True
    return False


def _signed_is_affine(g: SignedPL, P: LatticePolytope) -> bool:
    cells = linearity_regions(g, P).cells
    first = cells[0][1]
    # affine on P iff every cell's function agrees with the first one
    return all(piece == first for _, piece in cells)


def integrate_pl(g: PLExpression, P: LatticePolytope) -> Fraction:
    """Exact integral of g over P."""
    total = Fraction(0)
    for cell, piece in linearity_regions(g, P):
        total += integrate_polynomial(cell, poly_affine(piece.slope, piece.constant))
    return total


def mean_value(g: PLExpression, P: LatticePolytope) -> Fraction:
    return integrate_pl(g, P) / P.volume


def _sign_split(cell: LatticePolytope, h: AffinePiece):
    """Yield (sub-cell, sign) pieces of ``cell`` on which h has constant sign."""
    if all(a == 0 for a in h.slope):
        yield cell, (1 if h.constant >= 0 else -1)
        return
    base = [(f.normal, f.offset) for f in cell.facets]
    # h >= 0  <=>  <-slope, x> <= constant
    pos = intersect_halfspaces(base + [(tuple(-a for a in h.slope), h.constant)], cell.dim)
    neg = intersect_halfspaces(base + [(h.slope, -h.constant)], cell.dim)
    if pos is not None:
        yield pos, 1
    if neg is not None:
        yield neg, -1


def integrate_abs_power(g: PLExpression, P: LatticePolytope, p=1, tol: float = 1e-12):
    """Integral of |g|^p over P.

    Integer p: exact rational, via sign-refined linearity cells and monomial
    moments.  Real p >= 1: float, via the closed-form simplex integral of a
    truncated power evaluated with extended precision (accuracy well below
    ``tol``).
    """
    if isinstance(p, int) or (isinstance(p, Fraction) and p.denominator == 1):
        p = int(p)
        if p < 1:
            raise ValidationError("p must be >= 1")
        total = Fraction(0)
        n = P.dim
        for cell, piece in linearity_regions(g, P):
            for sub_cell, sign in _sign_split(cell, piece):
                h = piece if sign > 0 else -piece
                total += integrate_polynomial(sub_cell, poly_pow(poly_affine(h.slope, h.constant), p, n))
        return total
    p = float(p)
    if p < 1:
        raise ValidationError("p must be >= 1")
    if p.is_integer():
        return integrate_abs_power(g, P, int(p))
    digits = max(30, int(-math.log10(tol)) + 20)
    return float(CellTriangulation(g, P).abs_power(AffinePiece.zero(P.dim), p, dps=digits))


def integrate_power(g: PLExpression, P: LatticePolytope, p: int) -> Fraction:
    """Integral of g^p (signed) over P without sign refinement.

    Uses the vertex-value formula for powers of affine functions over a
    simplex, a second route independent of the monomial moments.
    """
    from ._exact import complete_homogeneous

    n = P.dim
    total = Fraction(0)
    for cell, piece in linearity_regions(g, P):
        for s in cell.simplices:
            vals = [piece(v) for v in s]
            total += (
                simplex_volume(s)
                * math.factorial(p)
                * math.factorial(n)
                / math.factorial(p + n)
                * complete_homogeneous(vals, p)
            )
    return total


# -- fast |g + l|^p evaluation over a fixed triangulation -----------------------


def _truncated_power_dd(nodes, N, one):
    """Divided difference of t -> max(t, 0)^N at (possibly repeated) nodes.

    Works over Fraction (integer N) or mpmath numbers.  Nodes are sorted so
    coincident nodes are contiguous and handled by the confluent rule.
    """
    xs = sorted(nodes)
    m = len(xs)

    def deriv(t, order):
        if t <= 0:
            return 0 * one
        coeff = one
        for i in range(order):
            coeff *= N - i
        return coeff * t ** (N - order)

    table = [deriv(x, 0) for x in xs]
    for width in range(1, m):
        new = []
        for i in range(m - width):
            j = i + width
            if xs[j] == xs[i]:
                new.append(deriv(xs[i], width) / math.factorial(width))
            else:
                new.append((table[i + 1] - table[i]) / (xs[j] - xs[i]))
        table = new
    return table[0]


def simplex_abs_power(values: Sequence, vol, p, dps: int = 40):
    """Integral of |h|^p over a simplex on which h is affine with the given vertex values.

    Based on the B-spline identity: the push-forward of the uniform measure
    on an n-simplex under an affine map has density n times a divided
    difference of truncated powers.
    """
    n = len(values) - 1
    if isinstance(p, int):
        N = n + p
        one = Fraction(1)
        pos = _truncated_power_dd([Fraction(v) for v in values], N, one)
        neg = _truncated_power_dd([-Fraction(v) for v in values], N, one)
        return vol * Fraction(math.factorial(n) * math.factorial(p), math.factorial(N)) * (pos + neg)
    with mpmath.workdps(dps):
        one = mpmath.mpf(1)
        N = n + mpmath.mpf(p)
        mvals = [mpmath.mpf(v.numerator) / v.denominator for v in map(Fraction, values)]
        pos = _truncated_power_dd(mvals, N, one)
        neg = _truncated_power_dd([-v for v in mvals], N, one)
        scale = mpmath.factorial(n) * mpmath.gamma(p + 1) / mpmath.gamma(N + 1)
        vol_m = mpmath.mpf(Fraction(vol).numerator) / Fraction(vol).denominator
        return +(vol_m * scale * (pos + neg))


class CellTriangulation:
    """Triangulated linearity cells of ``g``, reused across many shifts.

    ``abs_power(l, p)`` integrates |g + l|^p over P for an affine ``l``;
    g + l stays affine on each cell, so only vertex values change.
    """

    def __init__(self, g: PLExpression, P: LatticePolytope):
        self.polytope = P
        self.simplices = []
        for cell, piece in linearity_regions(g, P):
            for s in cell.simplices:
                self.simplices.append((s, simplex_volume(s), [piece(v) for v in s]))

    def abs_power(self, shift: AffinePiece, p, dps: int = 40):
        total = 0
        for s, vol, vals in self.simplices:
            shifted = [a + shift(v) for a, v in zip(vals, s)]
            total = total + simplex_abs_power(shifted, vol, p, dps)
        return total
