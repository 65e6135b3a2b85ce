"""Experiment harness: moment convergence, product detection, norm
equivalence and relative-stability scans over families of toric test
configurations.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ._exact import fmt, poly_affine, poly_pow, solve
from .geometry import LatticePolytope, integrate_polynomial
from .invariants import (
    NormReport,
    continuous_projection,
    df,
    df_relative,
    infimum_norm,
    reduced_norm,
)
from .plfun import PLConvexFunction, as_signed, integrate_power, integrate_pl
from .quantize import (
    SubtorusDirections,
    ToricTestConfig,
    quantized_projection,
    trace_moment,
    weight_spectrum,
)

__all__ = [
    "ConvergenceReport",
    "ScanRecord",
    "ScanSummary",
    "ProbeRow",
    "ProductWitness",
    "default_k_list",
    "moment_convergence",
    "product_detector",
    "norm_equivalence_probe",
    "stability_scan",
    "mc_cross_check",
    "fit_rate_constant",
    "convergence_csv",
    "scan_csv",
]

DEFAULT_POINT_BUDGET = 10**6


def point_budget() -> int:
    raw = os.environ.get("KSTAB_POINT_BUDGET")
    return int(raw) if raw else DEFAULT_POINT_BUDGET


def default_k_list(tc: ToricTestConfig, budget: int | None = None, k_max: int | None = None) -> List[int]:
    """Geometric levels q, 2q, 4q, ... while the lattice-point count fits the budget."""
    budget = point_budget() if budget is None else budget
    P = tc.polytope
    n = P.dim
    q = tc.period
    extent = [max(v[i] for v in P.vertices) - min(v[i] for v in P.vertices) for i in range(n)]
    out = []
    k = q
    while True:
        # bounding-box count: an upper bound for |kP ∩ Z^n|
        box = math.prod(math.floor(e * k) + 1 for e in extent)
        if box > budget or (k_max is not None and k > k_max):
            break
        out.append(k)
        k *= 2
    return out


@dataclass(frozen=True)
class ConvergenceReport:
    p: int
    mode: str
    k_list: Tuple[int, ...]
    moments: Tuple[Fraction, ...]
    target: Fraction
    residuals: Tuple[float, ...]
    fitted_rate: Optional[float]
    oscillatory: bool
    extrapolated_limit: Optional[Fraction]

    def relative_error(self, i: int = -1) -> float:
        m = self.moments[i]
        if self.target == 0:
            return 0.0 if m == 0 else math.inf
        return float(abs(m - self.target) / abs(self.target))

    def extrapolation_error(self) -> Optional[float]:
        if self.extrapolated_limit is None:
            return None
        if self.target == 0:
            return 0.0 if self.extrapolated_limit == 0 else math.inf
        return float(abs(self.extrapolated_limit - self.target) / abs(self.target))


def _level_moment(args):
    tc, W, p, k, mode = args
    spec = weight_spectrum(tc, k)
    if mode == "raw":
        values = spec.centered
    else:
        values = quantized_projection(spec, W).projected
    return trace_moment(values, k, p, "signed") / Fraction(tc.D) ** p


def continuous_moment(tc: ToricTestConfig, W: SubtorusDirections, p: int, mode: str = "projected") -> Fraction:
    """(1/V) * integral over P of P(f - mean f)^p (projected) or (f - mean f)^p (raw)."""
    P = tc.polytope
    f = tc.function
    if mode == "raw":
        centered = f.shift(-integrate_pl(f, P) / P.volume)
        return integrate_power(centered, P, p) / P.volume
    proj = continuous_projection(f, P, W).projected
    return integrate_polynomial(P, poly_pow(poly_affine(proj.slope, proj.constant), p, P.dim)) / P.volume


def _fit_rate(k_list, residuals) -> Optional[float]:
    half = len(k_list) // 2
    ks = np.array(k_list[half:], dtype=float)
    rs = np.array(residuals[half:], dtype=float)
    keep = rs > 0
    if keep.sum() < 2:
        return None
    slope, _ = np.polyfit(np.log(ks[keep]), np.log(rs[keep]), 1)
    return float(slope)


def moment_convergence(
    tc: ToricTestConfig,
    W: SubtorusDirections,
    p: int,
    k_list: Sequence[int] | None = None,
    mode: str = "projected",
    workers: int = 1,
) -> ConvergenceReport:
    """Compare the level-k trace moments with their continuous limit."""
    if mode not in ("projected", "raw"):
        raise ValueError(f"unknown mode {mode!r}")
    p = int(p)
    if k_list is None:
        k_list = default_k_list(tc)
    k_list = tuple(int(k) for k in k_list)
    jobs = [(tc, W, p, k, mode) for k in k_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            moments = tuple(pool.map(_level_moment, jobs))
    else:
        moments = tuple(_level_moment(j) for j in jobs)
    target = continuous_moment(tc, W, p, mode)
    residuals = tuple(float(abs(m - target)) for m in moments)
    oscillatory = any(b > a for a, b in zip(residuals, residuals[1:]))
    rate = None if oscillatory else _fit_rate(k_list, residuals)
    extrapolated = None
    if len(k_list) >= 2:
        k1, k2 = k_list[-2], k_list[-1]
        # cancels a c/k correction exactly
        extrapolated = (k2 * moments[-1] - k1 * moments[-2]) / (k2 - k1)
    return ConvergenceReport(p, mode, k_list, moments, target, residuals, rate, oscillatory, extrapolated)


def fit_rate_constant(k_list: Sequence[int], errors: Sequence[Fraction]) -> Fraction:
    """Constant C for a bound err(k) <= C / k, fitted from the given levels.

    k * err(k) is interpolated as a polynomial in 1/k through all samples and
    C is the larger of the observed maximum and the value at 1/k = 0, so the
    bound also covers levels beyond the fitted range when k * err increases.
    """
    scaled = [Fraction(k) * Fraction(e) for k, e in zip(k_list, errors)]
    if not scaled:
        raise ValueError("need at least one level")
    rows = [[Fraction(1, k) ** j for j in range(len(scaled))] for k in k_list]
    coeffs = solve(rows, scaled)
    if coeffs is None:
        raise ValueError("levels must be distinct")
    return max(max(scaled), coeffs[0])


@dataclass(frozen=True)
class ProductWitness:
    """Outcome of the product test.

    For a product configuration ``direction`` holds the rational
    coordinates of the one-parameter subgroup in the W basis; otherwise
    ``residual`` is the PL function f - mean(f) - P(f - mean(f)) and
    ``residual_inner`` its mean square.
    """

    is_product: bool
    direction: Optional[Tuple[Fraction, ...]]
    residual: Optional[PLConvexFunction]
    residual_inner: Fraction

    def __iter__(self):
        yield self.is_product
        yield self.direction if self.is_product else self.residual


def product_detector(tc: ToricTestConfig, W: SubtorusDirections) -> ProductWitness:
    """Exact test: product iff the reduced p = 2 inner integral vanishes."""
    report = reduced_norm(tc, W, 2)
    proj = continuous_projection(tc.function, tc.polytope, W)
    if report.exact_inner == 0:
        return ProductWitness(True, proj.coefficients, None, Fraction(0))
    P = tc.polytope
    f = tc.function
    residual = f.shift(-integrate_pl(f, P) / P.volume).add_affine(-proj.projected)
    return ProductWitness(False, None, residual.prune(P), report.exact_inner)


@dataclass(frozen=True)
class ProbeRow:
    id: str
    reduced: NormReport
    infimum: NormReport
    ratio: Optional[float]


def _named(corpus) -> List[Tuple[str, ToricTestConfig]]:
    out = []
    for i, item in enumerate(corpus):
        if isinstance(item, ToricTestConfig):
            out.append((f"c{i}", item))
        else:
            name, tc = item
            out.append((str(name), tc))
    return out


def norm_equivalence_probe(corpus, W: SubtorusDirections, p=1, tol: float = 1e-8):
    """Reduced vs infimum norm over a corpus; returns (rows, empirical delta).

    Raises AssertionError if some infimum exceeds the reduced norm by more
    than ``tol``.  delta is None when every member has zero reduced norm.
    """
    rows = []
    for name, tc in _named(corpus):
        red = reduced_norm(tc, W, p)
        inf, _ = infimum_norm(tc, W, p)
        if inf.value > red.value + tol:
            raise AssertionError(f"{name}: infimum {inf.value} exceeds reduced {red.value}")
        ratio = inf.value / red.value if red.value > 0 else None
        rows.append(ProbeRow(name, red, inf, ratio))
    ratios = [r.ratio for r in rows if r.ratio is not None]
    return rows, (min(ratios) if ratios else None)


@dataclass(frozen=True)
class ScanRecord:
    id: str
    DF: Fraction
    DF_T: Fraction
    reduced_norm_1: Fraction
    ratio: Optional[Fraction]
    product_flag: bool


@dataclass
class ScanSummary:
    records: List[ScanRecord]
    delta: Optional[Fraction]
    unstable: List[str] = field(default_factory=list)


def stability_scan(tc_list, W: SubtorusDirections) -> ScanSummary:
    """DF, relative DF and reduced L^1 norm per configuration.

    The reduced L^1 norm is its own inner integral, so every ratio is an
    exact rational.  ``delta`` is the least DF_T / norm over non-product
    members; ``unstable`` lists members with DF_T < 0.
    """
    records = []
    for name, tc in _named(tc_list):
        product = product_detector(tc, W).is_product
        norm1 = reduced_norm(tc, W, 1).exact_inner
        dft = df_relative(tc, W)
        ratio = dft / norm1 if norm1 else None
        records.append(ScanRecord(name, df(tc), dft, norm1, ratio, product))
    ratios = [r.ratio for r in records if not r.product_flag and r.ratio is not None]
    unstable = [r.id for r in records if r.DF_T < 0]
    return ScanSummary(records, min(ratios) if ratios else None, unstable)


def _float_pieces(f: PLConvexFunction):
    slopes = np.array([[float(x) for x in p.slope] for p in f.pieces])
    consts = np.array([float(p.constant) for p in f.pieces])
    return slopes, consts


def mc_cross_check(g, P: LatticePolytope, p=1, samples: int = 10**6, seed: int = 0):
    """Rejection-sampled Monte-Carlo estimate of the integral of |g|^p over P.

    Returns (estimate, standard error).  Independent of the exact
    integration code: only point evaluation of g and facet tests are used.
    """
    if samples < 10**4:
        raise ValueError("need at least 10^4 samples")
    g = as_signed(g)
    n = P.dim
    lo = np.array([float(min(v[i] for v in P.vertices)) for i in range(n)])
    hi = np.array([float(max(v[i] for v in P.vertices)) for i in range(n)])
    rng = np.random.default_rng(seed)
    x = lo + (hi - lo) * rng.random((samples, n))
    inside = np.ones(samples, dtype=bool)
    for f in P.facets:
        inside &= x @ np.array(f.normal, dtype=float) <= float(f.offset)
    ps, pc = _float_pieces(g.plus)
    ms, mc = _float_pieces(g.minus)
    vals = (x @ ps.T + pc).max(axis=1) - (x @ ms.T + mc).max(axis=1)
    contrib = np.where(inside, np.abs(vals) ** float(p), 0.0)
    box = float(np.prod(hi - lo))
    estimate = box * contrib.mean()
    stderr = box * contrib.std(ddof=1) / math.sqrt(samples)
    return float(estimate), float(stderr)


def convergence_csv(report: ConvergenceReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "m_k", "target", "residual"])
    for k, m, r in zip(report.k_list, report.moments, report.residuals):
        w.writerow([k, fmt(m), fmt(report.target), fmt(abs(m - report.target))])
    return buf.getvalue()


def scan_csv(summary: ScanSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "DF", "DF_T", "norm1", "ratio", "product"])
    for r in summary.records:
        w.writerow(
            [
                r.id,
                fmt(r.DF),
                fmt(r.DF_T),
                fmt(r.reduced_norm_1),
                "" if r.ratio is None else fmt(r.ratio),
                str(r.product_flag).lower(),
            ]
        )
    return buf.getvalue()
