"""Continuous invariants of toric test configurations.

Under the toric dictionary the tangent of the geodesic ray is f - mean(f)
on P with the Lebesgue measure, torus Hamiltonians are mean-zero affine
functions, and the Donaldson-Futaki invariant is the 1/k coefficient of the
normalized weight sum.  Everything upstream of a p-th root is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import mpmath

from ._exact import dot, fmt, poly_affine, poly_mul, solve
from .errors import DegenerateGram, NonConvergence, ValidationError
from .geometry import (
    LatticePolytope,
    boundary_integral,
    boundary_volume,
    integrate_polynomial,
)
from .plfun import (
    AffinePiece,
    CellTriangulation,
    PLConvexFunction,
    integrate_abs_power,
    integrate_pl,
    linearity_regions,
)
from .quantize import SubtorusDirections, ToricTestConfig, ehrhart_fit

__all__ = [
    "ProjectionResult",
    "NormReport",
    "continuous_projection",
    "df",
    "df_boundary",
    "futaki_boundary",
    "norm_p",
    "twisted_norm",
    "reduced_norm",
    "infimum_norm",
    "df_relative",
    "pth_root",
]


@dataclass(frozen=True)
class ProjectionResult:
    """L^2(P) projection of f - mean(f) onto mean-zero affine functions with slope in W."""

    coefficients: Tuple[Fraction, ...]
    projected: AffinePiece
    residual_mean_square: Fraction

    def to_json(self) -> dict:
        return {
            "coefficients": [fmt(c) for c in self.coefficients],
            "projected": self.projected.to_json(),
            "residual_mean_square": fmt(self.residual_mean_square),
        }


@dataclass(frozen=True)
class NormReport:
    p: float
    value: float
    exact_inner: Optional[Fraction]
    kind: str

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "p": fmt(Fraction(self.p)) if float(self.p).is_integer() else format(self.p, ".15g"),
            "value": format(self.value, ".15g"),
            "exact_inner": None if self.exact_inner is None else fmt(self.exact_inner),
        }


def pth_root(x: Fraction, p) -> float:
    """Correctly rounded float of x^(1/p) for a nonnegative rational x."""
    if x < 0:
        raise ValueError("negative inner integral")
    if x == 0:
        return 0.0
    with mpmath.workdps(40):
        return float(mpmath.root(mpmath.mpf(x.numerator) / x.denominator, p))


def _report(inner, p, kind: str) -> NormReport:
    if isinstance(inner, Fraction):
        return NormReport(p, pth_root(inner, p), inner, kind)
    return NormReport(p, float(inner) ** (1.0 / p) if inner > 0 else 0.0, None, kind)


def _check_p(p):
    if p < 1:
        raise ValidationError("p must be >= 1")
    if isinstance(p, float) and p.is_integer():
        return int(p)
    return p


def _integrate_times_affine(f: PLConvexFunction, P: LatticePolytope, a: AffinePiece) -> Fraction:
    total = Fraction(0)
    weight = poly_affine(a.slope, a.constant)
    for cell, piece in linearity_regions(f, P):
        total += integrate_polynomial(cell, poly_mul(poly_affine(piece.slope, piece.constant), weight))
    return total


def _centered_generators(P: LatticePolytope, W: SubtorusDirections):
    bary = P.barycenter
    return [AffinePiece(w, -dot(w, bary)) for w in W.basis]


def continuous_projection(f: PLConvexFunction, P: LatticePolytope, W: SubtorusDirections) -> ProjectionResult:
    V = P.volume
    fbar = integrate_pl(f, P) / V
    centered = f.shift(-fbar)
    variance = integrate_abs_power(centered, P, 2) / V
    if W.d == 0:
        return ProjectionResult((), AffinePiece.zero(P.dim), variance)
    gens = _centered_generators(P, W)
    gram = [[integrate_polynomial(P, poly_mul(poly_affine(a.slope, a.constant), poly_affine(b.slope, b.constant))) for b in gens] for a in gens]
    rhs = [_integrate_times_affine(f, P, g) for g in gens]
    coeffs = solve(gram, rhs)
    if coeffs is None:
        raise DegenerateGram("singular L^2 Gram matrix", "continuous_projection")
    projected = AffinePiece.zero(P.dim)
    for c, g in zip(coeffs, gens):
        projected = projected + g.scale(c)
    # Pythagoras: residual = variance - |projected|^2
    proj_sq = sum((c * r for c, r in zip(coeffs, rhs)), Fraction(0)) / V
    return ProjectionResult(tuple(coeffs), projected, variance - proj_sq)


def futaki_boundary(P: LatticePolytope, g) -> Fraction:
    """(1 / 2V) * (boundary integral of g against dσ  -  (Vol_σ(∂P) / V) * integral of g)."""
    V = P.volume
    a = boundary_volume(P) / V
    return (boundary_integral(P, g) - a * integrate_pl(g, P)) / (2 * V)


def df(tc: ToricTestConfig) -> Fraction:
    """Donaldson-Futaki invariant from the 1/k coefficient of w_k / (k N_k)."""
    return ehrhart_fit(tc).F1 / tc.D


def df_boundary(tc: ToricTestConfig) -> Fraction:
    """F1 of the scaled configuration from the boundary formula (equals df(tc) * D)."""
    return futaki_boundary(tc.polytope, tc.f)


def _centered_function(tc: ToricTestConfig) -> PLConvexFunction:
    f = tc.function
    return f.shift(-integrate_pl(f, tc.polytope) / tc.polytope.volume)


def norm_p(tc: ToricTestConfig, p=2) -> NormReport:
    p = _check_p(p)
    P = tc.polytope
    inner = integrate_abs_power(_centered_function(tc), P, p)
    return _report(inner / P.volume, p, "plain")


def _centered_affine(ell: AffinePiece, P: LatticePolytope) -> AffinePiece:
    return AffinePiece(ell.slope, -dot(ell.slope, P.barycenter))


def twisted_norm(tc: ToricTestConfig, ell: AffinePiece, p=2) -> NormReport:
    p = _check_p(p)
    P = tc.polytope
    g = _centered_function(tc).add_affine(_centered_affine(ell, P))
    return _report(integrate_abs_power(g, P, p) / P.volume, p, "twisted")


def reduced_norm(tc: ToricTestConfig, W: SubtorusDirections, p=2) -> NormReport:
    p = _check_p(p)
    P = tc.polytope
    proj = continuous_projection(tc.function, P, W)
    g = _centered_function(tc).add_affine(-proj.projected)
    return _report(integrate_abs_power(g, P, p) / P.volume, p, "reduced")


def df_relative(tc: ToricTestConfig, W: SubtorusDirections) -> Fraction:
    """DF minus the Futaki character of the projected product configuration."""
    proj = continuous_projection(tc.function, tc.polytope, W)
    return df(tc) - futaki_boundary(tc.polytope, proj.projected)


# -- infimum norm ---------------------------------------------------------------

_GOLDEN = (math.sqrt(5) - 1) / 2


def _golden_section(phi, a: float, b: float, xtol: float):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = phi(c), phi(d)
    evals = 2
    while b - a > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = phi(d)
        evals += 1
    return (c, fc) if fc <= fd else (d, fd), evals


def infimum_norm(
    tc: ToricTestConfig,
    W: SubtorusDirections,
    p=2,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> Tuple[NormReport, AffinePiece]:
    """Minimize the twisted norm over mean-zero affine l with slope in span(W).

    Derivative-free descent: golden-section line searches along the basis
    directions and their pairwise sums and differences, started from the
    L^2 projection (so the result never exceeds the reduced norm).
    Returns the achieved norm and the minimizing l.
    """
    p = _check_p(p)
    P = tc.polytope
    V = P.volume
    proj = continuous_projection(tc.function, P, W)
    centered = _centered_function(tc)
    cache = CellTriangulation(centered, P)
    gens = _centered_generators(P, W)

    def shift_of(t: Sequence[float]) -> AffinePiece:
        out = AffinePiece.zero(P.dim)
        for ti, g in zip(t, gens):
            out = out + g.scale(Fraction(ti))
        return out

    def objective(t) -> float:
        return float(cache.abs_power(shift_of(t), p)) / float(V)

    start = [-float(c) for c in proj.coefficients]
    exact_start = tuple(-c for c in proj.coefficients)
    best = objective(start)
    d = W.d
    directions = []
    for i in range(d):
        directions.append(tuple(float(i == j) for j in range(d)))
    for i in range(d):
        for j in range(i + 1, d):
            directions.append(tuple(float(r in (i, j)) for r in range(d)))
            directions.append(tuple(1.0 if r == i else (-1.0 if r == j else 0.0) for r in range(d)))

    t = list(start)
    iterations = 0
    improved_somewhere = False
    scale = max(1.0, max((abs(x) for x in t), default=0.0))
    while d > 0:
        previous = best
        for direction in directions:
            def phi(s, direction=direction):
                return objective([ti + s * di for ti, di in zip(t, direction)])

            step = 0.5 * scale
            # expand the bracket while the end points still improve
            while phi(step) < best or phi(-step) < best:
                step *= 2.0
                iterations += 1
                if step > 1e12:
                    raise NonConvergence("objective unbounded along a search direction", "infimum_norm")
            (s, val), evals = _golden_section(phi, -step, step, xtol=1e-12 * scale)
            iterations += evals
            if val < best:
                best = val
                t = [ti + s * di for ti, di in zip(t, direction)]
                improved_somewhere = True
        if iterations > max_iter:
            raise NonConvergence(f"no convergence after {iterations} objective evaluations", "infimum_norm")
        if previous - best < tol:
            break

    # keep the exact projection point unless the search strictly improved on it
    minimizer = shift_of(t) if improved_somewhere else shift_of(exact_start)
    inner = cache.abs_power(minimizer, p)
    if improved_somewhere or not isinstance(inner, Fraction):
        return NormReport(p, float(inner / V) ** (1.0 / p), None, "infimum"), minimizer
    return _report(inner / V, p, "infimum"), minimizer
