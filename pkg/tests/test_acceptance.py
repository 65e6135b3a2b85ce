"""Acceptance criteria 1-8.

Each test wraps one criterion in the ``criterion`` fixture, which prints a
single PASS/FAIL line and repeats it in the pytest terminal summary.
Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import json
import random
import subprocess
import sys
import time
from fractions import Fraction as F

import numpy as np
import pytest

from kstab.corpus import hexagon, interval, kink, pl, random_affine_function, random_pl_function, standard_corpus, trapezoid
from kstab.geometry import standard_simplex
from kstab.invariants import (
    continuous_projection,
    df,
    df_boundary,
    df_relative,
    norm_p,
    reduced_norm,
)
from kstab.lab import (
    default_k_list,
    fit_rate_constant,
    mc_cross_check,
    moment_convergence,
    norm_equivalence_probe,
    product_detector,
)
from kstab.plfun import integrate_abs_power, integrate_pl, integrate_power
from kstab.quantize import (
    SubtorusDirections,
    ToricTestConfig,
    ehrhart_fit,
    limit_projection_coefficients,
    quantized_projection,
    trace_moment,
    weight_spectrum,
)

pytestmark = pytest.mark.acceptance


def full(tc):
    return SubtorusDirections.full(tc.dim)


def test_c1_df_two_routes(criterion):
    with criterion(1, "DF two-route agreement") as c:
        start = time.perf_counter()
        corpus = standard_corpus()
        assert len(corpus) >= 20
        for name, tc in corpus:
            assert df(tc) * tc.D == df_boundary(tc), name
        elapsed = time.perf_counter() - start
        assert elapsed < 30, f"took {elapsed:.1f}s"
        c.detail = f"{len(corpus)} configurations, exact equality, {elapsed:.1f}s"


# -- criterion 2: independent one-dimensional oracle ----------------------------


def _simpson(g, breaks):
    """Exact integral of g over [breaks[0], breaks[-1]] when g is quadratic between breaks."""
    total = F(0)
    for a, b in zip(breaks, breaks[1:]):
        m = (a + b) / 2
        total += (b - a) / 6 * (g(a) + 4 * g(m) + g(b))
    return total


def test_c2_flagship_values(criterion):
    with criterion(2, "flagship values for max(0, 2x-1) on [0, 1]") as c:
        def f(x):
            return max(F(0), 2 * x - 1)

        brk = [F(0), F(1, 2), F(1)]
        F0 = _simpson(f, brk)
        inner2 = _simpson(lambda x: (f(x) - F0) ** 2, brk)
        coeff = _simpson(lambda x: (f(x) - F0) * (x - F(1, 2)), brk) / _simpson(lambda x: (x - F(1, 2)) ** 2, brk)
        reduced2 = _simpson(lambda x: (f(x) - F0 - coeff * (x - F(1, 2))) ** 2, brk)
        # weight sums by direct enumeration: w_k/(k N_k) = (k + 2) / (4 (k + 1)) for even k,
        # so the 1/k coefficient is 1/4; the projected x - 1/2 has w_k = 0 at even k
        for k in range(2, 202, 2):
            w = sum(max(0, 2 * a - k) for a in range(k + 1))
            assert F(w, k * (k + 1)) == F(k + 2, 4 * (k + 1))
            assert sum(a - F(k, 2) for a in range(k + 1)) == 0
        df_oracle = F(1, 4)
        dft_oracle = df_oracle - 0
        assert (F0, inner2, reduced2, coeff) == (F(1, 4), F(5, 48), F(1, 48), 1)

        tc = ToricTestConfig.build(interval(), kink())
        W = SubtorusDirections.full(1)
        got = {
            "F0": ehrhart_fit(tc).F0,
            "DF": df(tc),
            "norm2 inner": norm_p(tc, 2).exact_inner,
            "reduced2 inner": reduced_norm(tc, W, 2).exact_inner,
            "DF_T": df_relative(tc, W),
        }
        want = {"F0": F0, "DF": df_oracle, "norm2 inner": inner2, "reduced2 inner": reduced2, "DF_T": dft_oracle}
        assert got == want, got
        c.detail = ", ".join(f"{k} = {v}" for k, v in got.items())


# -- criterion 3: moment convergence --------------------------------------------

C3_MEMBERS = ["interval-kink", "interval-thirds", "interval-rational", "simplex-max", "simplex-cut", "trapezoid-cut"]


def test_c3_moment_convergence(criterion):
    with criterion(3, "moment convergence, full torus, p = 1, 2, 3") as c:
        start = time.perf_counter()
        corpus = dict(standard_corpus())
        worst, worst_rich = 0.0, 0.0
        for name in C3_MEMBERS:
            tc = corpus[name]
            assert reduced_norm(tc, full(tc), 2).exact_inner > 0, name  # not a product
            ks = default_k_list(tc)
            need = 256 if tc.dim == 1 else 128
            assert ks[-1] >= need, (name, ks[-1])
            for p in (1, 2, 3):
                rep = moment_convergence(tc, full(tc), p, ks)
                res = rep.residuals
                assert all(b <= a for a, b in zip(res, res[1:])), (name, p, "residuals increase")
                if res[0] > 0:
                    assert res[-1] < res[0], (name, p)
                err = rep.relative_error()
                rich = rep.extrapolation_error()
                assert err <= 0.02, (name, p, err)
                assert rich <= 0.001, (name, p, rich)
                worst, worst_rich = max(worst, err), max(worst_rich, rich)
        elapsed = time.perf_counter() - start
        assert elapsed < 300, f"took {elapsed:.0f}s"
        c.detail = (
            f"{len(C3_MEMBERS)} members, worst relative error {worst:.2e}, "
            f"worst Richardson error {worst_rich:.2e}, {elapsed:.0f}s"
        )


# -- criterion 4: product detector ----------------------------------------------


def _ground_truth_product(tc, W):
    """Affine on P iff one piece attains the max at every vertex; then test its slope against W."""
    P = tc.polytope
    f = tc.function
    for piece in f.pieces:
        if all(piece(v) == f(v) for v in P.vertices):
            M = np.array([[float(x) for x in w] for w in W.basis] + [[float(x) for x in piece.slope]])
            base = np.linalg.matrix_rank(M[:-1]) if W.d else 0
            return np.linalg.matrix_rank(M) == base if np.any(M[-1]) else True
    return False


def test_c4_product_detector(criterion):
    with criterion(4, "product detector on 20 random PL + 10 affine functions") as c:
        rng = random.Random(2024)
        shapes = [hexagon(), trapezoid(), standard_simplex(2)]
        members = []
        while len(members) < 20:
            tc = ToricTestConfig.build(shapes[len(members) % 3], random_pl_function(rng, 2, pieces=rng.randint(2, 4)))
            # keep only functions with a genuine kink inside P
            if not _ground_truth_product(tc, SubtorusDirections.full(2)):
                members.append(tc)
        for i in range(10):
            members.append(ToricTestConfig.build(shapes[i % 3], random_affine_function(rng, 2)))
        # half the affine members get slope on the diagonal, inside the partial torus below
        for i in range(20, 30, 2):
            tc = members[i]
            s = tc.function.pieces[0].slope[0]
            members[i] = ToricTestConfig.build(tc.polytope, pl(((s, s), tc.function.pieces[0].constant)))
        tori = {"full": SubtorusDirections.full(2), "diagonal": SubtorusDirections(2, ((1, 1),))}
        counts = {}
        for label, W in tori.items():
            positives = 0
            for i, tc in enumerate(members):
                truth = _ground_truth_product(tc, W)
                got = product_detector(tc, W)
                assert got.is_product == truth, (label, i, tc.function)
                assert got.is_product == (got.residual_inner == 0)
                positives += truth
            counts[label] = positives
        assert counts == {"full": 10, "diagonal": 5}
        c.detail = f"30 members, products found: full torus {counts['full']}, diagonal subtorus {counts['diagonal']}"


# -- criterion 5: rationality ---------------------------------------------------

C5_MEMBERS = ["interval-thirds", "interval-rational", "simplex-max", "simplex-cut", "trapezoid-cut"]


def test_c5_rationality(criterion, tmp_path):
    with criterion(5, "quantized coefficients within C/k of exact rational limits") as c:
        corpus = dict(standard_corpus())
        constants = {}
        for name in C5_MEMBERS:
            tc = corpus[name]
            W = full(tc)
            cont = continuous_projection(tc.function, tc.polytope, W).coefficients
            assert all(isinstance(x, F) for x in cont)
            levels = 8 if tc.dim == 1 else 7
            ks = [tc.period * 2**j for j in range(levels)]
            seq = limit_projection_coefficients(tc, W, ks)
            assert all(isinstance(x, F) for v in seq for x in v)
            errs = [max(abs(a - b) for a, b in zip(v, cont)) for v in seq]
            assert errs[0] > 0, name
            # fit on the lower levels, then check the held-out pair (k, 2k)
            C = fit_rate_constant(ks[:-2], errs[:-2])
            for k, e in zip(ks[-2:], errs[-2:]):
                assert e <= C / k, (name, k, float(e * k), float(C))
            constants[name] = float(C)

        # reproduced identically across independent runs
        tc = corpus["simplex-max"]
        doc = {
            "polytope": {"vertices": [[str(x) for x in v] for v in tc.polytope.vertices]},
            "function": tc.function.to_json(),
        }
        path = tmp_path / "simplex-max.json"
        path.write_text(json.dumps(doc))
        outs = [
            subprocess.run([sys.executable, "-m", "kstab", "project", "--input", str(path)],
                           capture_output=True, check=True, text=True).stdout
            for _ in range(2)
        ]
        assert outs[0] == outs[1]
        expected = [str(x) for x in continuous_projection(tc.function, tc.polytope, full(tc)).coefficients]
        assert json.loads(outs[0])["coefficients"] == expected
        c.detail = "fitted C: " + ", ".join(f"{k} {v:.3g}" for k, v in constants.items())


# -- criterion 6: norm sandwich -------------------------------------------------


def test_c6_norm_sandwich(criterion):
    with criterion(6, "infimum <= reduced norm, equality at p = 2") as c:
        by_dim = {}
        for name, tc in standard_corpus():
            by_dim.setdefault(tc.dim, []).append((name, tc))
        deltas = {}
        for p in (1, 2):
            ratios = []
            for n, members in by_dim.items():
                rows, delta = norm_equivalence_probe(members, SubtorusDirections.full(n), p, tol=1e-8)
                for row in rows:
                    assert row.infimum.value <= row.reduced.value + 1e-8, row.id
                    if p == 2:
                        assert abs(row.infimum.value - row.reduced.value) <= 1e-8, row.id
                if delta is not None:
                    ratios.append(delta)
            deltas[p] = min(ratios)
        assert deltas[1] > 0 and deltas[2] > 0
        c.detail = f"empirical delta: p=1 {deltas[1]:.6f}, p=2 {deltas[2]:.12f}"


# -- criterion 7: exactness cross-checks ----------------------------------------


def test_c7_exactness_cross_checks(criterion):
    with criterion(7, "Monte-Carlo agreement within 3 sigma and exact Pythagoras") as c:
        corpus = standard_corpus()
        worst = 0.0
        for i, (name, tc) in enumerate(corpus):
            P = tc.polytope
            W = full(tc)
            f = tc.function
            centered = f.shift(-integrate_pl(f, P) / P.volume)
            residual = centered.add_affine(-continuous_projection(f, P, W).projected)
            checks = [(f, 1), (centered, 1 + i % 3), (residual, 1 + (i + 1) % 3)]
            for j, (g, p) in enumerate(checks):
                exact = float(integrate_abs_power(g, P, p))
                est, err = mc_cross_check(g, P, p, samples=10**6, seed=100 * i + j)
                if err == 0:
                    # constant |g|^p on P: the estimate is exact up to rounding
                    assert est == pytest.approx(exact, rel=1e-12, abs=1e-300), name
                    continue
                z = abs(est - exact) / err
                assert z <= 3, (name, p, z)
                worst = max(worst, z)

            # continuous Pythagoras
            proj = continuous_projection(f, P, W)
            assert integrate_power(centered, P, 2) == integrate_power(residual, P, 2) + integrate_power(proj.projected, P, 2)
            # level-k Pythagoras and Killing orthogonality, full and partial torus
            tori = [W] + ([SubtorusDirections(tc.dim, ((1,) * tc.dim,))] if tc.dim > 1 else [])
            for Wk in tori:
                for k in (tc.period, 2 * tc.period):
                    spec = weight_spectrum(tc, k)
                    qp = quantized_projection(spec, Wk)
                    assert trace_moment(spec.centered, k, 2) == trace_moment(qp.projected, k, 2) + trace_moment(qp.residual, k, 2)
                    assert all(qp.residual.dot(qp.generator(r)) == 0 for r in range(Wk.d))
        c.detail = f"{3 * len(corpus)} integrals, worst |z| = {worst:.2f}; Pythagoras exact on {len(corpus)} members"


# -- criterion 8: homogeneity and invariance ------------------------------------


def test_c8_homogeneity(criterion):
    with criterion(8, "DF shift invariance and degree-one homogeneity") as c:
        checked = 0
        for name, tc in standard_corpus():
            P = tc.polytope
            W = full(tc)
            f = tc.function
            base_df, base_dft = df(tc), df_relative(tc, W)
            base_norms = {(kind, p): fn(p) for p in (1, 2) for kind, fn in (
                ("plain", lambda p: norm_p(tc, p).exact_inner),
                ("reduced", lambda p: reduced_norm(tc, W, p).exact_inner),
            )}
            for shift in (F(1, 3), F(-2)):
                assert df(ToricTestConfig.build(P, f.shift(shift))) == base_df, name
            for m in (2, 3):
                scaled = ToricTestConfig.build(P, f.scale(m))
                assert df(scaled) == m * base_df, name
                assert df_relative(scaled, W) == m * base_dft, name
                for p in (1, 2):
                    assert norm_p(scaled, p).exact_inner == m**p * base_norms[("plain", p)], name
                    assert reduced_norm(scaled, W, p).exact_inner == m**p * base_norms[("reduced", p)], name
            checked += 1
        c.detail = f"{checked} members, shifts 1/3 and -2, scales 2 and 3"
