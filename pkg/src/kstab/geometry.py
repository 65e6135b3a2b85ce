"""Exact rational geometry of lattice polytopes.

Polytopes are stored with both descriptions (vertices and primitive facet
inequalities) and all quantities are computed in :class:`Fraction`
arithmetic.  The double description is obtained by brute force over
subsets, which is fine at desk scale (n <= 3 or 4, a few dozen vertices).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from ._exact import (
    Poly,
    Vector,
    affine_rank,
    det,
    dot,
    frac,
    kernel_vector,
    primitive,
    solve,
    sub,
    vec,
)
from .errors import ValidationError

__all__ = [
    "Facet",
    "LatticePolytope",
    "volume",
    "triangulate",
    "moment_integral",
    "integrate_polynomial",
    "simplex_volume",
    "lattice_points",
    "boundary_integral",
    "boundary_volume",
    "facet_volume",
    "unit_cube",
    "standard_simplex",
]


@dataclass(frozen=True)
class Facet:
    """Inequality ``<normal, x> <= offset`` with a primitive integer normal."""

    normal: Tuple[int, ...]
    offset: Fraction

    @property
    def lattice_covolume_normalizer(self) -> Fraction:
        # det(edges, normal) * this = lattice-normalized (n-1)-volume * (n-1)!
        return Fraction(1, sum(u * u for u in self.normal))

    def value(self, x: Sequence[Fraction]) -> Fraction:
        return dot(self.normal, x)


@dataclass(frozen=True)
class LatticePolytope:
    """Full-dimensional rational polytope in R^n with lattice Z^n.

    Build instances with :meth:`from_vertices` or :meth:`from_inequalities`;
    the direct constructor trusts its arguments.
    """

    dim: int
    vertices: Tuple[Vector, ...]
    facets: Tuple[Facet, ...]

    # -- construction --------------------------------------------------------

    @classmethod
    def from_vertices(cls, points: Iterable[Sequence]) -> "LatticePolytope":
        pts = sorted(set(vec(p) for p in points))
        if not pts:
            raise ValidationError("polytope needs at least one vertex")
        n = len(pts[0])
        if n < 1 or any(len(p) != n for p in pts):
            raise ValidationError("vertices must all have the same positive length")
        if affine_rank(pts) != n:
            raise ValidationError("polytope is not full-dimensional")
        return cls.from_inequalities(_hull_inequalities(pts, n), n)

    @classmethod
    def from_inequalities(
        cls, inequalities: Iterable[Tuple[Sequence, object]], dim: int | None = None
    ) -> "LatticePolytope":
        """Polytope ``{x : <u, x> <= c}``; redundant inequalities are dropped.

        Raises ValidationError when the region is empty, unbounded or
        lower-dimensional.
        """
        poly = intersect_halfspaces(inequalities, dim, check_bounded=True)
        if poly is None:
            raise ValidationError("inequalities do not define a full-dimensional polytope")
        return poly

    # -- derived data ----------------------------------------------------------

    @cached_property
    def facet_vertex_sets(self) -> Tuple[frozenset, ...]:
        return tuple(
            frozenset(i for i, v in enumerate(self.vertices) if f.value(v) == f.offset)
            for f in self.facets
        )

    @cached_property
    def simplices(self) -> Tuple[Tuple[Vector, ...], ...]:
        ids = _pulling_triangulation(
            frozenset(range(len(self.vertices))), self.dim, self.facet_vertex_sets, self.vertices
        )
        return tuple(tuple(self.vertices[i] for i in s) for s in ids)

    @cached_property
    def volume(self) -> Fraction:
        return sum((simplex_volume(s) for s in self.simplices), Fraction(0))

    @cached_property
    def barycenter(self) -> Vector:
        n = self.dim
        out = []
        for i in range(n):
            e = [0] * n
            e[i] = 1
            out.append(moment_integral(self, tuple(e)) / self.volume)
        return tuple(out)

    @property
    def denominator(self) -> int:
        """Least q with qP a lattice polytope."""
        out = 1
        for v in self.vertices:
            for x in v:
                out = math.lcm(out, x.denominator)
        return out

    def contains(self, x: Sequence[Fraction]) -> bool:
        return all(f.value(x) <= f.offset for f in self.facets)

    def facet_simplices(self, j: int) -> List[Tuple[Vector, ...]]:
        """Triangulation of facet ``j`` into (n-1)-simplices."""
        return _face_simplices(self, self.facet_vertex_sets[j])

    def validate(self) -> None:
        n = self.dim
        for f in self.facets:
            if math.gcd(*f.normal) != 1:
                raise ValidationError(f"facet normal {f.normal} is not primitive")
        for v in self.vertices:
            tight = [f for f in self.facets if f.value(v) == f.offset]
            if any(f.value(v) > f.offset for f in self.facets):
                raise ValidationError(f"vertex {v} violates a facet inequality")
            if len(tight) < n:
                raise ValidationError(f"vertex {v} lies on fewer than {n} facets")
        if affine_rank(list(self.vertices)) != n:
            raise ValidationError("polytope is not full-dimensional")

    def to_json(self) -> dict:
        from ._exact import fmt

        return {"dim": self.dim, "vertices": [[fmt(x) for x in v] for v in self.vertices]}

    def __repr__(self) -> str:
        from ._exact import fmt

        vs = ", ".join("(" + ", ".join(fmt(x) for x in v) + ")" for v in self.vertices)
        return f"LatticePolytope(dim={self.dim}, vertices=[{vs}])"


def intersect_halfspaces(
    inequalities, dim: int | None = None, check_bounded: bool = False
) -> LatticePolytope | None:
    """Exact intersection of halfspaces; None if empty or not full-dimensional."""
    hs = []
    for normal, offset in inequalities:
        u = vec(normal)
        c = frac(offset)
        if all(a == 0 for a in u):
            if c < 0:
                return None
            continue
        hs.append(primitive(u, c))
    hs = sorted(set(hs))
    if dim is None:
        if not hs:
            raise ValidationError("no inequalities given")
        dim = len(hs[0][0])
    n = dim
    if check_bounded and not _is_bounded(hs, n):
        raise ValidationError("inequalities define an unbounded region")
    points = set()
    for combo in combinations(hs, n):
        x = solve([u for u, _ in combo], [c for _, c in combo])
        if x is None:
            continue
        if all(dot(u, x) <= c for u, c in hs):
            points.add(x)
    pts = sorted(points)
    if len(pts) < n + 1 or affine_rank(pts) != n:
        return None
    facets = []
    for u, c in hs:
        tight = [p for p in pts if dot(u, p) == c]
        if len(tight) >= n and affine_rank(tight) == n - 1:
            facets.append(Facet(u, c))
    return LatticePolytope(n, tuple(pts), tuple(facets))


def _is_bounded(hs, n: int) -> bool:
    # bounded iff the normals positively span R^n; check no direction d with
    # <u, d> <= 0 for all u, via the vertex set of the recession cone
    # restricted to the box |d_i| <= 1
    box = []
    for i in range(n):
        e = [0] * n
        e[i] = 1
        box.append((tuple(e), Fraction(1)))
        box.append((tuple(-x for x in e), Fraction(1)))
    cone = [(u, Fraction(0)) for u, _ in hs] + box
    for combo in combinations(cone, n):
        x = solve([u for u, _ in combo], [c for _, c in combo])
        if x is None or all(a == 0 for a in x):
            continue
        if all(dot(u, x) <= c for u, c in cone):
            return False
    return True


def _hull_inequalities(pts: List[Vector], n: int):
    if n == 1:
        lo, hi = min(p[0] for p in pts), max(p[0] for p in pts)
        return [((1,), hi), ((-1,), -lo)]
    out = set()
    for combo in combinations(pts, n):
        base = combo[0]
        rows = [sub(p, base) for p in combo[1:]]
        normal = kernel_vector(rows, n)
        if normal is None:
            continue
        c = dot(normal, base)
        vals = [dot(normal, p) for p in pts]
        if all(v <= c for v in vals):
            out.add(primitive(normal, c))
        elif all(v >= c for v in vals):
            out.add(primitive(tuple(-x for x in normal), -c))
    return sorted(out)


def _pulling_triangulation(face: frozenset, d: int, facet_sets, vertices) -> List[Tuple[int, ...]]:
    """Triangulate a d-face (given by vertex ids) by coning from its least vertex."""
    if d == 0:
        return [tuple(sorted(face))]
    if d == 1:
        return [tuple(sorted(face))] if len(face) == 2 else _pull_segment(face, vertices)
    v0 = min(face)
    ridges = set()
    for fs in facet_sets:
        r = face & fs
        if len(r) >= d and r != face and affine_rank([vertices[i] for i in sorted(r)]) == d - 1:
            ridges.add(frozenset(r))
    out = []
    for r in sorted(ridges, key=sorted):
        if v0 in r:
            continue
        for s in _pulling_triangulation(r, d - 1, facet_sets, vertices):
            out.append((v0,) + s)
    return out


def _pull_segment(face, vertices):
    # collinear ids: only the two extremes are vertices of the edge
    ids = sorted(face, key=lambda i: vertices[i])
    return [(ids[0], ids[-1])]


def _face_simplices(P: LatticePolytope, face: frozenset) -> List[Tuple[Vector, ...]]:
    ids = _pulling_triangulation(face, P.dim - 1, P.facet_vertex_sets, P.vertices)
    return [tuple(P.vertices[i] for i in s) for s in ids]


# -- measures and integrals ----------------------------------------------------


def simplex_volume(simplex: Sequence[Vector]) -> Fraction:
    n = len(simplex) - 1
    v0 = simplex[0]
    return abs(det([sub(v, v0) for v in simplex[1:]])) / math.factorial(n)


def volume(P: LatticePolytope) -> Fraction:
    """Exact Euclidean volume of P."""
    return P.volume


def triangulate(P: LatticePolytope) -> List[Tuple[Vector, ...]]:
    """Simplices with disjoint interiors covering P (pulling triangulation)."""
    return list(P.simplices)


def _sub_indices(alpha: Tuple[int, ...]):
    if not alpha:
        yield ()
        return
    for a in range(alpha[0] + 1):
        for rest in _sub_indices(alpha[1:]):
            yield (a,) + rest


def simplex_monomial_integral(simplex: Sequence[Vector], alpha: Sequence[int]) -> Fraction:
    """Closed form for the integral of x^alpha over a simplex.

    vol * n! * alpha! / (n + |alpha|)! times the sum, over all splittings
    alpha = beta_0 + ... + beta_n, of prod_i multinomial(beta_i) * v_i^beta_i.
    """
    alpha = tuple(alpha)
    n = len(alpha)
    deg = sum(alpha)
    memo = {}

    def split(i: int, rest: Tuple[int, ...]) -> Fraction:
        if i == len(simplex) - 1:
            return _weighted_power(simplex[i], rest)
        key = (i, rest)
        if key not in memo:
            memo[key] = sum(
                (
                    _weighted_power(simplex[i], b) * split(i + 1, tuple(r - x for r, x in zip(rest, b)))
                    for b in _sub_indices(rest)
                ),
                Fraction(0),
            )
        return memo[key]

    alpha_fact = math.prod(math.factorial(a) for a in alpha)
    return simplex_volume(simplex) * math.factorial(n) * alpha_fact * split(0, alpha) / math.factorial(n + deg)


def _weighted_power(v: Vector, beta: Tuple[int, ...]) -> Fraction:
    out = Fraction(math.factorial(sum(beta)))
    for x, b in zip(v, beta):
        out = out * x**b / math.factorial(b)
    return out


def moment_integral(P: LatticePolytope, alpha: Sequence[int]) -> Fraction:
    """Exact integral of x^alpha over P."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != P.dim or any(a < 0 for a in alpha):
        raise ValidationError(f"bad multi-index {alpha} for dimension {P.dim}")
    return sum((simplex_monomial_integral(s, alpha) for s in P.simplices), Fraction(0))


def integrate_polynomial(P: LatticePolytope, poly: Poly) -> Fraction:
    return sum((c * moment_integral(P, e) for e, c in poly.items()), Fraction(0))


def lattice_points(P: LatticePolytope, k: int = 1) -> np.ndarray:
    """Points of kP ∩ Z^n as an (N, n) int64 array in lexicographic order."""
    k = int(k)
    if k < 1:
        raise ValidationError("dilation k must be a positive integer")
    n = P.dim
    axes = []
    for i in range(n):
        lo = math.ceil(min(v[i] for v in P.vertices) * k)
        hi = math.floor(max(v[i] for v in P.vertices) * k)
        axes.append(np.arange(lo, hi + 1, dtype=np.int64))
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    keep = np.ones(len(grid), dtype=bool)
    for f in P.facets:
        lhs = grid @ np.asarray(f.normal, dtype=np.int64)
        keep &= lhs * f.offset.denominator <= k * f.offset.numerator
    return grid[keep]


def _sigma_volume(simplex: Sequence[Vector], facet: Facet) -> Fraction:
    n = len(facet.normal)
    v0 = simplex[0]
    rows = [sub(v, v0) for v in simplex[1:]] + [tuple(Fraction(u) for u in facet.normal)]
    return abs(det(rows)) * facet.lattice_covolume_normalizer / math.factorial(n - 1)


def _affine_pieces(g):
    """Normalize an affine piece or max-of-affine function to a list of pieces."""
    pieces = getattr(g, "pieces", None)
    if pieces is None:
        pieces = [g]
    return list(pieces)


def _dominance_cells(P: LatticePolytope, pieces) -> List[Tuple[LatticePolytope, object]]:
    unique = []
    for p in pieces:
        if p not in unique:
            unique.append(p)
    if len(unique) == 1:
        return [(P, unique[0])]
    base = [(f.normal, f.offset) for f in P.facets]
    cells = []
    for j, pj in enumerate(unique):
        extra = [
            (sub(pi.slope, pj.slope), pj.constant - pi.constant)
            for i, pi in enumerate(unique)
            if i != j
        ]
        cell = intersect_halfspaces(base + extra, P.dim)
        if cell is not None:
            cells.append((cell, pj))
    return cells


def boundary_integral(P: LatticePolytope, g) -> Fraction:
    """Exact sum over facets F of the integral of g over F against dσ.

    dσ is Lebesgue measure on each facet normalized so that the lattice
    Z^n ∩ (facet direction) has covolume one; for n = 1 it is the counting
    measure on the two endpoints.  ``g`` is an affine piece or a
    max-of-affine function.
    """
    facet_keys = {(f.normal, f.offset) for f in P.facets}
    total = Fraction(0)
    for cell, piece in _dominance_cells(P, _affine_pieces(g)):
        for j, f in enumerate(cell.facets):
            if (f.normal, f.offset) not in facet_keys:
                continue
            for s in cell.facet_simplices(j):
                mean = sum((piece(v) for v in s), Fraction(0)) / len(s)
                total += _sigma_volume(s, f) * mean
    return total


def facet_volume(P: LatticePolytope, j: int) -> Fraction:
    """Lattice-normalized volume of facet ``j``."""
    return sum((_sigma_volume(s, P.facets[j]) for s in P.facet_simplices(j)), Fraction(0))


def boundary_volume(P: LatticePolytope) -> Fraction:
    """Vol_σ(∂P), the lattice-normalized boundary volume."""
    return sum((facet_volume(P, j) for j in range(len(P.facets))), Fraction(0))


# -- a few standard shapes -----------------------------------------------------


def unit_cube(n: int, scale=1) -> LatticePolytope:
    s = frac(scale)
    corners = [[s * ((m >> i) & 1) for i in range(n)] for m in range(2**n)]
    return LatticePolytope.from_vertices(corners)


def standard_simplex(n: int, scale=1) -> LatticePolytope:
    s = frac(scale)
    pts = [[Fraction(0)] * n]
    for i in range(n):
        e = [Fraction(0)] * n
        e[i] = s
        pts.append(e)
    return LatticePolytope.from_vertices(pts)
