"""Small exact-arithmetic toolkit over :class:`fractions.Fraction`.

Dense Gaussian elimination, determinants and a dict-based sparse polynomial
type.  Everything here is sized for desk-scale problems (dimension <= 4,
a few dozen unknowns at most).
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

Vector = Tuple[Fraction, ...]
Poly = Dict[Tuple[int, ...], Fraction]


def frac(x) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to Fraction.

    Floats are rejected so that inexact data never leaks into exact paths.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    try:
        import numpy as np

        if isinstance(x, np.integer):
            return Fraction(int(x))
    except ImportError:  # pragma: no cover
        pass
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def vec(xs: Iterable) -> Vector:
    return tuple(frac(x) for x in xs)


def fmt(q: Fraction) -> str:
    """Serialize a rational as ``"p/q"`` (or ``"p"`` for integers)."""
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def dot(u: Sequence, v: Sequence):
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def sub(u: Sequence, v: Sequence) -> Vector:
    return tuple(a - b for a, b in zip(u, v))


def lcm_of_denominators(xs: Iterable[Fraction]) -> int:
    out = 1
    for x in xs:
        out = math.lcm(out, Fraction(x).denominator)
    return out


def primitive(normal: Sequence[Fraction], offset: Fraction) -> Tuple[Tuple[int, ...], Fraction]:
    """Rescale ``<normal, x> <= offset`` so the normal is a primitive integer vector."""
    scale = lcm_of_denominators(normal)
    ints = [int(a * scale) for a in normal]
    g = 0
    for a in ints:
        g = math.gcd(g, a)
    if g == 0:
        raise ValueError("zero normal vector")
    return tuple(a // g for a in ints), Fraction(offset) * scale / g


def _echelon(rows: List[List[Fraction]]) -> Tuple[List[List[Fraction]], List[int]]:
    m = [list(r) for r in rows]
    pivots: List[int] = []
    r = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                factor = m[i][c]
                m[i] = [a - factor * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def rank(rows: Sequence[Sequence]) -> int:
    if not rows:
        return 0
    return len(_echelon([[Fraction(x) for x in r] for r in rows])[1])


def affine_rank(points: Sequence[Sequence]) -> int:
    """Dimension of the affine hull of ``points`` (-1 for the empty set)."""
    if not points:
        return -1
    p0 = points[0]
    return rank([sub(p, p0) for p in points[1:]])


def solve(a: Sequence[Sequence], b: Sequence) -> Optional[Vector]:
    """Solve the square system ``a x = b`` exactly; None when singular."""
    n = len(a)
    if n == 0:
        return ()
    aug = [[Fraction(x) for x in row] + [Fraction(rhs)] for row, rhs in zip(a, b)]
    red, pivots = _echelon(aug)
    if pivots != list(range(n)):
        return None
    return tuple(red[i][n] for i in range(n))


def det(a: Sequence[Sequence]) -> Fraction:
    m = [[Fraction(x) for x in row] for row in a]
    n = len(m)
    out = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            out = -out
        out *= m[c][c]
        for i in range(c + 1, n):
            if m[i][c] != 0:
                factor = m[i][c] / m[c][c]
                m[i] = [x - factor * y for x, y in zip(m[i], m[c])]
    return out


def kernel_vector(rows: Sequence[Sequence], n: int) -> Optional[Vector]:
    """A nonzero vector orthogonal to every row, when the kernel is one-dimensional."""
    if not rows:
        return (Fraction(1),) if n == 1 else None
    red, pivots = _echelon([[Fraction(x) for x in r] for r in rows])
    free = [c for c in range(n) if c not in pivots]
    if len(free) != 1:
        return None
    f = free[0]
    out = [Fraction(0)] * n
    out[f] = Fraction(1)
    for i, c in enumerate(pivots):
        out[c] = -red[i][f]
    return tuple(out)


# -- sparse polynomials: {exponent tuple: coefficient} ------------------------


def poly_affine(slope: Sequence[Fraction], constant: Fraction) -> Poly:
    n = len(slope)
    out: Poly = {}
    if constant:
        out[(0,) * n] = Fraction(constant)
    for i, s in enumerate(slope):
        if s:
            e = [0] * n
            e[i] = 1
            out[tuple(e)] = Fraction(s)
    return out


def poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, Fraction(0)) + ca * cb
    return {e: c for e, c in out.items() if c}


def poly_pow(a: Poly, p: int, n: int) -> Poly:
    out: Poly = {(0,) * n: Fraction(1)}
    for _ in range(p):
        out = poly_mul(out, a)
    return out


def complete_homogeneous(values: Sequence, m: int):
    """h_m(values): sum of all degree-m monomials in ``values``."""
    h = [Fraction(1)] + [Fraction(0)] * m
    for x in values:
        for d in range(1, m + 1):
            h[d] = h[d] + x * h[d - 1]
    return h[m]
