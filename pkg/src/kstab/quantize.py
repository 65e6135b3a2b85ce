"""Weight spectra of toric test configurations and their level-k projections.

At level k the sections of the central fibre are indexed by the lattice
points a of kP and the generator acts diagonally with weight k f(a / k).
Everything here is exact: weights are integers once the function has been
passed through :func:`~kstab.plfun.clear_denominators`, and per-point
rationals are kept as integer numerators over one common denominator.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from ._exact import Vector, dot, fmt, rank, solve, vec
from .errors import DegenerateGram, FitMismatch, UnscaledConfig, ValidationError
from .geometry import LatticePolytope, lattice_points
from .plfun import PLConvexFunction, clear_denominators, linearity_regions

__all__ = [
    "ToricTestConfig",
    "WeightSpectrum",
    "SubtorusDirections",
    "EhrhartFit",
    "IntegerValues",
    "QuantizedProjection",
    "weight_spectrum",
    "ehrhart_fit",
    "quantized_projection",
    "trace_moment",
    "limit_projection_coefficients",
    "export_spectrum_csv",
]


@dataclass(frozen=True)
class ToricTestConfig:
    """Polytope plus PL convex function.

    When ``scaled`` is set, ``f`` has integral slopes and constants and
    equals D times the function the user supplied; :attr:`function` undoes
    the scaling.  Use :meth:`build` to get a scaled configuration.
    """

    polytope: LatticePolytope
    f: PLConvexFunction
    D: int = 1
    scaled: bool = False

    def __post_init__(self):
        if self.f.dim != self.polytope.dim:
            raise ValidationError(
                f"function dimension {self.f.dim} does not match polytope dimension {self.polytope.dim}"
            )
        if self.D < 1:
            raise ValidationError("scale D must be a positive integer")

    @classmethod
    def build(cls, polytope: LatticePolytope, f: PLConvexFunction) -> "ToricTestConfig":
        scaled, D = clear_denominators(f)
        return cls(polytope, scaled, D, True)

    @cached_property
    def function(self) -> PLConvexFunction:
        """The unscaled function f / D."""
        return self.f.scale(Fraction(1, self.D)) if self.D != 1 else self.f

    @property
    def dim(self) -> int:
        return self.polytope.dim

    @cached_property
    def period(self) -> int:
        """Least q such that q times every linearity cell is a lattice polytope."""
        return math.lcm(self.polytope.denominator, linearity_regions(self.f, self.polytope).denominator)


@dataclass(frozen=True)
class IntegerValues:
    """Per-point rationals stored as integer numerators over one denominator."""

    numerators: np.ndarray  # object dtype (Python ints) or int64
    denominator: int

    def __len__(self) -> int:
        return len(self.numerators)

    def __iter__(self):
        d = self.denominator
        return (Fraction(int(x), d) for x in self.numerators)

    def __getitem__(self, i) -> Fraction:
        return Fraction(int(self.numerators[i]), self.denominator)

    def to_list(self) -> List[Fraction]:
        return list(self)

    def power_sum(self, p: int, absolute: bool = False) -> Fraction:
        counts = Counter(int(x) for x in self.numerators)
        if absolute:
            s = sum(c * abs(v) ** p for v, c in counts.items())
        else:
            s = sum(c * v**p for v, c in counts.items())
        return Fraction(s, self.denominator**p)

    def dot(self, other: "IntegerValues") -> Fraction:
        s = sum(int(a) * int(b) for a, b in zip(self.numerators, other.numerators))
        return Fraction(s, self.denominator * other.denominator)


@dataclass(frozen=True)
class WeightSpectrum:
    """Raw weights lambda'_a = k f(a / k) over the lattice points of kP."""

    k: int
    points: np.ndarray
    raw_weights: np.ndarray

    @property
    def N(self) -> int:
        return len(self.points)

    @cached_property
    def trace(self) -> int:
        return int(sum(int(x) for x in self.raw_weights))

    @cached_property
    def centered(self) -> IntegerValues:
        N = self.N
        nums = self.raw_weights.astype(object) * N - self.trace
        return IntegerValues(nums, N)

    @property
    def centered_weights(self) -> List[Fraction]:
        return self.centered.to_list()

    @cached_property
    def coordinate_sums(self) -> Tuple[int, ...]:
        return tuple(int(x) for x in self.points.astype(object).sum(axis=0))

    @cached_property
    def coordinate_gram(self) -> Tuple[Tuple[int, ...], ...]:
        pts = self.points.astype(object)
        return tuple(tuple(int(x) for x in row) for row in pts.T @ pts)

    @cached_property
    def weighted_coordinate_sums(self) -> Tuple[int, ...]:
        pts = self.points.astype(object)
        return tuple(int(x) for x in self.raw_weights.astype(object) @ pts)


@dataclass(frozen=True)
class SubtorusDirections:
    """Rational basis w_1..w_d of a subspace W of Q^n (d may be 0)."""

    dim: int
    basis: Tuple[Vector, ...]

    def __post_init__(self):
        basis = tuple(vec(w) for w in self.basis)
        if any(len(w) != self.dim for w in basis):
            raise ValidationError("basis vectors must have the ambient dimension")
        if len(basis) > self.dim or rank(basis) != len(basis):
            raise ValidationError("subtorus directions must be linearly independent")
        object.__setattr__(self, "basis", basis)

    @classmethod
    def full(cls, n: int) -> "SubtorusDirections":
        return cls(n, tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)))

    @classmethod
    def none(cls, n: int) -> "SubtorusDirections":
        return cls(n, ())

    @property
    def d(self) -> int:
        return len(self.basis)

    def combine(self, coefficients: Sequence[Fraction]) -> Vector:
        out = [Fraction(0)] * self.dim
        for c, w in zip(coefficients, self.basis):
            for i, x in enumerate(w):
                out[i] += c * x
        return tuple(out)

    def contains(self, v: Sequence[Fraction]) -> bool:
        return rank(list(self.basis) + [vec(v)]) == self.d


def weight_spectrum(tc: ToricTestConfig, k: int, points: np.ndarray | None = None) -> WeightSpectrum:
    if not tc.scaled:
        raise UnscaledConfig("configuration must be scaled with ToricTestConfig.build first")
    k = int(k)
    if points is None:
        points = lattice_points(tc.polytope, k)
    raw = None
    for piece in tc.f.pieces:
        slope = np.array([int(s) for s in piece.slope], dtype=np.int64)
        vals = points @ slope + k * int(piece.constant)
        raw = vals if raw is None else np.maximum(raw, vals)
    return WeightSpectrum(k, points, raw)


# -- exact polynomial fitting ---------------------------------------------------


def _fit_polynomial(ks: Sequence[int], values: Sequence, degree: int) -> Tuple[Fraction, ...]:
    rows = [[Fraction(k) ** e for e in range(degree + 1)] for k in ks[: degree + 1]]
    coeffs = solve(rows, values[: degree + 1])
    if coeffs is None:  # pragma: no cover - distinct sample points
        raise FitMismatch("singular Vandermonde system")
    return coeffs


def _poly_eval(coeffs: Sequence[Fraction], k) -> Fraction:
    return sum((c * Fraction(k) ** e for e, c in enumerate(coeffs)), Fraction(0))


@dataclass(frozen=True)
class EhrhartFit:
    """N_k and w_k as exact polynomials in k on the progression k in q Z."""

    period: int
    N_poly: Tuple[Fraction, ...]  # ascending coefficients, degree n
    w_poly: Tuple[Fraction, ...]  # ascending coefficients, degree n + 1

    @property
    def F0(self) -> Fraction:
        return self.w_poly[-1] / self.N_poly[-1]

    @property
    def F1(self) -> Fraction:
        n = len(self.N_poly) - 1
        return (self.w_poly[n] - self.F0 * self.N_poly[n - 1]) / self.N_poly[n]

    def N(self, k) -> Fraction:
        return _poly_eval(self.N_poly, k)

    def w(self, k) -> Fraction:
        return _poly_eval(self.w_poly, k)


def ehrhart_fit(tc: ToricTestConfig) -> EhrhartFit:
    """Fit N_k and the weight sum w_k on k = q, 2q, ... and extract F0, F1.

    F0 and F1 are the first two coefficients of w(k) / (k N(k)) in powers
    of 1/k; F1 is the Donaldson-Futaki invariant of the (scaled) function.
    """
    n = tc.dim
    q = tc.period
    ks = [q * m for m in range(1, n + 4)]
    held_out = q * (n + 4)
    counts, sums = [], []
    for k in ks + [held_out]:
        spec = weight_spectrum(tc, k)
        counts.append(spec.N)
        sums.append(spec.trace)
    N_poly = _fit_polynomial(ks, counts, n)
    w_poly = _fit_polynomial(ks, sums, n + 1)
    for k, N, w in zip(ks + [held_out], counts, sums):
        if _poly_eval(N_poly, k) != N or _poly_eval(w_poly, k) != w:
            raise FitMismatch(f"polynomial fit fails at k={k} (period {q} too small?)")
    if N_poly[-1] == 0:
        raise FitMismatch("leading lattice-point coefficient vanished")
    return EhrhartFit(q, N_poly, w_poly)


# -- Killing-form projection at level k -----------------------------------------


@dataclass(frozen=True)
class QuantizedProjection:
    """Orthogonal projection of the centered spectrum onto the torus generators.

    The generators are G_i(a) = <w_i, a> - mean over points; the inner
    product is the trace form sum_a X(a) Y(a).
    """

    spectrum: WeightSpectrum
    directions: SubtorusDirections
    coefficients: Tuple[Fraction, ...]

    @cached_property
    def _direction_ints(self) -> Tuple[Tuple[int, ...], int]:
        eta = self.directions.combine(self.coefficients) if self.coefficients else (Fraction(0),) * self.directions.dim
        L = 1
        for x in eta:
            L = math.lcm(L, x.denominator)
        return tuple(int(x * L) for x in eta), L

    @cached_property
    def projected(self) -> IntegerValues:
        eta, L = self._direction_ints
        N = self.spectrum.N
        pts = self.spectrum.points.astype(object)
        inner = pts @ np.array(eta, dtype=object) if len(eta) else np.zeros(N, dtype=object)
        shift = sum(e * s for e, s in zip(eta, self.spectrum.coordinate_sums))
        return IntegerValues(inner * N - shift, L * N)

    @cached_property
    def residual(self) -> IntegerValues:
        _, L = self._direction_ints
        c = self.spectrum.centered
        return IntegerValues(c.numerators * L - self.projected.numerators, L * c.denominator)

    def generator(self, i: int) -> IntegerValues:
        """G_i as per-point rationals."""
        w = self.directions.basis[i]
        L = 1
        for x in w:
            L = math.lcm(L, x.denominator)
        wi = np.array([int(x * L) for x in w], dtype=object)
        N = self.spectrum.N
        nums = self.spectrum.points.astype(object) @ wi
        return IntegerValues(nums * N - sum(a * b for a, b in zip(wi, self.spectrum.coordinate_sums)), L * N)


def _level_gram(spec: WeightSpectrum, W: SubtorusDirections):
    N = spec.N
    S1 = spec.coordinate_sums
    S2 = spec.coordinate_gram
    Sl = spec.weighted_coordinate_sums
    T = spec.trace
    means = [dot(w, S1) / N for w in W.basis]
    gram = []
    for wi, mi in zip(W.basis, means):
        row = []
        for wj, mj in zip(W.basis, means):
            quad = sum((wi[r] * S2[r][s] * wj[s] for r in range(W.dim) for s in range(W.dim)), Fraction(0))
            row.append(quad - N * mi * mj)
        gram.append(row)
    rhs = [dot(w, Sl) - T * m for w, m in zip(W.basis, means)]
    return gram, rhs


def quantized_projection(spec: WeightSpectrum, W: SubtorusDirections) -> QuantizedProjection:
    """Solve the d x d trace-form Gram system for the projection coefficients."""
    if W.d == 0:
        return QuantizedProjection(spec, W, ())
    if spec.N < W.d + 1:
        raise DegenerateGram(f"only {spec.N} points at level k={spec.k} for {W.d} directions", "quantized_projection")
    gram, rhs = _level_gram(spec, W)
    coeffs = solve(gram, rhs)
    if coeffs is None:
        raise DegenerateGram(f"singular Gram matrix at level k={spec.k}", "quantized_projection")
    return QuantizedProjection(spec, W, coeffs)


def trace_moment(values, k: int, p: int, mode: str = "signed") -> Fraction:
    """(1 / (k^p N)) * sum of values^p (``signed``) or |values|^p (``absolute``)."""
    if p < 1:
        raise ValidationError("p must be >= 1")
    if mode not in ("signed", "absolute"):
        raise ValidationError(f"unknown mode {mode!r}")
    absolute = mode == "absolute"
    if not isinstance(values, IntegerValues):
        vals = [Fraction(v) for v in values]
        if not vals:
            return Fraction(0)
        den = 1
        for v in vals:
            den = math.lcm(den, v.denominator)
        values = IntegerValues(np.array([int(v * den) for v in vals], dtype=object), den)
    N = len(values)
    if N == 0:
        return Fraction(0)
    return values.power_sum(p, absolute) / (Fraction(k) ** p * N)


def limit_projection_coefficients(
    tc: ToricTestConfig, W: SubtorusDirections, k_list: Iterable[int]
) -> List[Tuple[Fraction, ...]]:
    """Level-k projection coefficients for each k, in the unscaled normalization.

    Weights and generators both grow linearly in k, so the coefficients are
    already scale-free; only the base-change factor D is removed.
    """
    out = []
    for k in k_list:
        proj = quantized_projection(weight_spectrum(tc, k), W)
        out.append(tuple(c / tc.D for c in proj.coefficients))
    return out


def export_spectrum_csv(spec: WeightSpectrum, D: int = 1) -> str:
    """CSV rows: k, point coordinates, raw weight, centered weight (as p/q)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    n = spec.points.shape[1]
    writer.writerow(["k"] + [f"x{i}" for i in range(n)] + ["raw_weight", "centered_weight"])
    for pt, raw, cen in zip(spec.points, spec.raw_weights, spec.centered):
        writer.writerow([spec.k] + [int(x) for x in pt] + [fmt(Fraction(int(raw), D)), fmt(cen / D)])
    return buf.getvalue()
