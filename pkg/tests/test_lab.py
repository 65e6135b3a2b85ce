import csv
import io
import random
from fractions import Fraction as F

import pytest

from kstab.corpus import hexagon, interval, kink, pl, random_affine_function, standard_corpus, trapezoid, unit_cube
from kstab.invariants import continuous_projection, reduced_norm
from kstab.lab import (
    continuous_moment,
    convergence_csv,
    default_k_list,
    fit_rate_constant,
    mc_cross_check,
    moment_convergence,
    norm_equivalence_probe,
    product_detector,
    scan_csv,
    stability_scan,
)
from kstab.plfun import AffinePiece, integrate_power
from kstab.quantize import SubtorusDirections, ToricTestConfig

FULL1 = SubtorusDirections.full(1)


def tc_of(P, f):
    return ToricTestConfig.build(P, f)


class TestMomentConvergence:
    def test_linear_residual_exact(self):
        # sum (a - k/2)^2 over a = 0..k is k(k+1)(k+2)/12
        ks = [1, 2, 3, 5, 8, 13]
        rep = moment_convergence(tc_of(interval(), pl(((1,), 0))), FULL1, 2, ks)
        assert rep.target == F(1, 12)
        for k, m in zip(ks, rep.moments):
            assert m == F(k * (k + 1) * (k + 2), 12) / (k * k * (k + 1))
            assert m - rep.target == F(1, 6 * k)
        # Richardson removes the 1/k term exactly
        assert rep.extrapolated_limit == F(1, 12)
        assert rep.fitted_rate == pytest.approx(-1, abs=1e-9)

    def test_kink_rate(self):
        tc = tc_of(interval(), kink())
        rep = moment_convergence(tc, FULL1, 2, [2 * 2**j for j in range(9)])
        assert rep.residuals[-1] < rep.residuals[0]
        assert not rep.oscillatory
        assert rep.fitted_rate == pytest.approx(-1, abs=0.2)

    def test_trivial(self):
        rep = moment_convergence(tc_of(unit_cube(2), pl(((0, 0), 0))), SubtorusDirections.full(2), 2, [1, 2, 4])
        assert rep.moments == (0, 0, 0)
        assert rep.target == 0
        assert rep.relative_error() == 0

    def test_even_p_nonnegative(self, corpus):
        for name, tc in corpus[:10]:
            W = SubtorusDirections.full(tc.dim)
            for mode in ("projected", "raw"):
                rep = moment_convergence(tc, W, 2, [tc.period, 2 * tc.period], mode)
                assert rep.target >= 0 and all(m >= 0 for m in rep.moments), name

    def test_raw_minus_projected_target(self, corpus):
        for name, tc in corpus:
            W = SubtorusDirections.full(tc.dim)
            raw = continuous_moment(tc, W, 2, "raw")
            proj = continuous_moment(tc, W, 2, "projected")
            res = continuous_projection(tc.function, tc.polytope, W)
            P = tc.polytope
            proj_sq = integrate_power(res.projected, P, 2) / P.volume
            assert proj == proj_sq, name
            assert raw - proj == res.residual_mean_square, name

    def test_product_modes_agree(self):
        for f in (pl(((3,), -2)), pl(((F(1, 2),), 1))):
            tc = tc_of(interval(), f)
            ks = [1, 2, 4, 8]
            for p in (2, 3):
                a = moment_convergence(tc, FULL1, p, ks, "projected")
                b = moment_convergence(tc, FULL1, p, ks, "raw")
                assert a.moments == b.moments and a.target == b.target

    def test_parallel_matches_serial(self):
        tc = dict(standard_corpus())["simplex-max"]
        W = SubtorusDirections.full(2)
        ks = [3, 6, 12]
        assert moment_convergence(tc, W, 3, ks, workers=2) == moment_convergence(tc, W, 3, ks)

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            moment_convergence(tc_of(interval(), kink()), FULL1, 2, [2], "odd")

    def test_csv(self):
        rep = moment_convergence(tc_of(interval(), kink()), FULL1, 2, [4, 8, 16])
        rows = list(csv.reader(io.StringIO(convergence_csv(rep))))
        assert rows[0] == ["k", "m_k", "target", "residual"]
        assert [int(r[0]) for r in rows[1:]] == [4, 8, 16]
        assert [F(r[1]) for r in rows[1:]] == list(rep.moments)


class TestDefaultLevels:
    def test_budget(self):
        tc = tc_of(unit_cube(2), pl(((1, 0), 0), ((0, 1), 0)))
        ks = default_k_list(tc, budget=10**6)
        assert ks[0] == tc.period
        assert all(b == 2 * a for a, b in zip(ks, ks[1:]))
        assert (ks[-1] + 1) ** 2 <= 10**6 < (2 * ks[-1] + 1) ** 2

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("KSTAB_POINT_BUDGET", "100")
        tc = tc_of(interval(), kink())
        assert default_k_list(tc) == [2, 4, 8, 16, 32, 64]


class TestFitRateConstant:
    def test_exact_model(self):
        ks = [4, 8, 16]
        errs = [F(3, k) - F(2, k * k) for k in ks]
        assert fit_rate_constant(ks, errs) == 3

    def test_observed_max_when_decreasing(self):
        ks = [1, 2, 4]
        errs = [F(1, k * k) for k in ks]
        assert fit_rate_constant(ks, errs) == 1


class TestProductDetector:
    def test_affine(self):
        ok, direction = product_detector(tc_of(interval(), pl(((3,), -2))), FULL1)
        assert ok and direction == (3,)

    def test_kink(self):
        result = product_detector(tc_of(interval(), kink()), FULL1)
        ok, residual = result
        assert not ok
        assert result.residual_inner == F(1, 48)
        # residual equals max(0, 2x-1) - 1/4 - (x - 1/2) pointwise
        for x in (F(0), F(1, 3), F(1, 2), F(4, 5), F(1)):
            assert residual([x]) == kink()([x]) - F(1, 4) - (x - F(1, 2))

    def test_affine_outside_W(self):
        W = SubtorusDirections(2, ((1, 0),))
        ok, residual = product_detector(tc_of(unit_cube(2), pl(((0, 1), 0))), W)
        assert not ok
        for pt in [(0, 0), (F(1, 3), F(3, 4)), (1, 1)]:
            assert residual(pt) == pt[1] - F(1, 2)

    def test_rational_direction(self):
        ok, direction = product_detector(tc_of(hexagon(), pl(((F(2, 3), F(-1, 5)), 1))), SubtorusDirections.full(2))
        assert ok and direction == (F(2, 3), F(-1, 5))

    def test_product_flag_implies_zero_norm(self, corpus):
        for name, tc in corpus:
            W = SubtorusDirections.full(tc.dim)
            if product_detector(tc, W).is_product:
                assert reduced_norm(tc, W, 1).exact_inner == 0, name


class TestProbe:
    def test_affine_corpus(self):
        rng = random.Random(5)
        corpus = [tc_of(hexagon(), random_affine_function(rng, 2)) for _ in range(3)]
        rows, delta = norm_equivalence_probe(corpus, SubtorusDirections.full(2), 1)
        assert delta is None
        assert all(r.ratio is None and r.reduced.value == 0 for r in rows)

    def test_kink(self):
        tc = tc_of(interval(), kink())
        rows, delta = norm_equivalence_probe([("kink", tc)], FULL1, 2)
        assert rows[0].id == "kink"
        assert rows[0].ratio == pytest.approx(1, abs=1e-8)
        rows, delta = norm_equivalence_probe([tc], FULL1, 1)
        assert 0 < delta <= 1 + 1e-8


class TestScan:
    def test_kink(self):
        summary = stability_scan([("kink", tc_of(interval(), kink()))], FULL1)
        (rec,) = summary.records
        assert rec.DF_T == F(1, 4)
        assert rec.reduced_norm_1 == F(1, 8)
        assert rec.ratio == 2
        assert summary.delta == 2
        assert not summary.unstable

    def test_affine(self):
        fs = [pl(((3,), -2)), pl(((F(1, 2),), 1)), pl(((0,), 4))]
        summary = stability_scan([tc_of(interval(), f) for f in fs], FULL1)
        assert all(r.product_flag for r in summary.records)
        assert summary.delta is None

    def test_homogeneity(self):
        tcs = [(f"m{m}", tc_of(interval(), kink().scale(m))) for m in range(1, 6)]
        summary = stability_scan(tcs, FULL1)
        for m, rec in enumerate(summary.records, start=1):
            assert rec.DF_T == m * F(1, 4)
            assert rec.reduced_norm_1 == m * F(1, 8)
            assert rec.ratio == 2

    def test_unstable_flagged(self):
        # the trapezoid has a nonzero Futaki character, so with W empty
        # one of the two opposite affine functions has DF < 0
        up = tc_of(trapezoid(), pl(((0, 1), 0)))
        down = tc_of(trapezoid(), pl(((0, -1), 0)))
        summary = stability_scan([("up", up), ("down", down)], SubtorusDirections.none(2))
        assert [r.DF_T for r in summary.records] == [F(-4, 75), F(4, 75)]
        assert summary.unstable == ["up"]
        assert summary.delta == min(r.ratio for r in summary.records)

    def test_csv(self):
        summary = stability_scan([("kink", tc_of(interval(), kink()))], FULL1)
        rows = list(csv.reader(io.StringIO(scan_csv(summary))))
        assert rows == [["id", "DF", "DF_T", "norm1", "ratio", "product"], ["kink", "1/4", "1/4", "1/8", "2", "false"]]


class TestMonteCarlo:
    def test_centered_linear(self):
        est, err = mc_cross_check(AffinePiece((1,), F(-1, 2)), interval(), 2, 10**6, seed=1)
        assert abs(est - 1 / 12) < 3 * err

    def test_kink(self):
        est, err = mc_cross_check(kink().shift(F(-1, 4)), interval(), 2, 10**6, seed=2)
        assert abs(est - 5 / 48) < 3 * err

    def test_zero(self):
        est, err = mc_cross_check(pl(((0, 0), 0)), hexagon(), 1, 10**4)
        assert est == 0 and err == 0

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            mc_cross_check(kink(), interval(), 1, 100)

    def test_deterministic(self):
        a = mc_cross_check(kink(), interval(), 1, 10**4, seed=9)
        assert a == mc_cross_check(kink(), interval(), 1, 10**4, seed=9)
