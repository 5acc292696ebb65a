import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from onevstwo.common import ConditionalOnL, Scheme, UnconditionalOnM
from onevstwo.errors import DomainError, OptimizationFailure
from onevstwo.measurements import (bhattacharyya, bspade_error, bspade_exponent, classical_chernoff,
                                   direct_imaging_bounds, direct_imaging_bounds_unconditional,
                                   direct_imaging_exponent, gaussian_zeta, sliver_error,
                                   sliver_exponent)
from onevstwo.psf import OverlapStats, PointSpreadFunction, gaussian_stats, sample_gaussian_psf, validate
from onevstwo.quantum_limits import Scenario, min_error_conditional, quantum_chernoff

# scipy.integrate.quad of the 1-D zeta integrand, minimized with minimize_scalar (xatol 1e-12)
DIRECT_ORACLE = {
    0.5: (0.00023031946530702993, 0.9997697270178995),
    2.0: (0.03575442933646236, 0.9650270905357476),
    5.0: (0.5279576660549155, 0.5926020633558817),
    5.5: (0.6751982246849341, 0.5119877209457744),
}


def scipy_zeta(s, d):
    def g(x):
        lc = abs(x * d / 2) + math.log1p(math.exp(-abs(x * d))) - math.log(2)
        return math.exp(-x * x / 2 + s * (lc - d * d / 8)) / math.sqrt(2 * math.pi)
    return integrate.quad(g, -60, 60, epsabs=1e-14, epsrel=1e-13, limit=400)[0]


class TestBinarySchemes:
    def test_bspade_conditional(self):
        s = gaussian_stats(2.0)
        r = bspade_error(s, .5, .5, ConditionalOnL(5))
        assert r.alpha == 0.0
        assert r.beta == pytest.approx(0.28650479686019010, rel=1e-13)
        assert r.p_error == pytest.approx(0.5 * 0.28650479686019010, rel=1e-13)
        assert r.scheme is Scheme.BSPADE

    def test_sliver_conditional(self):
        r = sliver_error(gaussian_stats(2.0), .5, .5, ConditionalOnL(5))
        assert r.beta == pytest.approx(0.33442221020527659, rel=1e-13)
        assert r.p_error == pytest.approx(0.16721110510263829, rel=1e-13)

    def test_unconditional(self):
        s = gaussian_stats(2.0)
        assert bspade_error(s, .5, .5, UnconditionalOnM(1000, 0.01)).p_error == pytest.approx(
            0.05460720647536115, rel=1e-12)
        assert sliver_error(s, .5, .5, UnconditionalOnM(500, 0.01)).p_error == pytest.approx(
            0.18678642717276365, rel=1e-12)

    def test_unconditional_tiny_separation_keeps_precision(self):
        s = gaussian_stats(1e-4)
        beta = bspade_error(s, .5, .5, UnconditionalOnM(1000, 0.01)).beta
        expected = math.exp(1000 * math.log1p(-0.01 * -math.expm1(-2e-8 / 32)))
        assert 1 - beta == pytest.approx(1 - expected, rel=1e-9)

    def test_simplified_rule_flag(self):
        s = gaussian_stats(0.5)
        r = bspade_error(s, 0.2, 0.8, ConditionalOnL(3))
        assert "simplified_rule_not_lrt" in r.flags
        assert bspade_error(s, 0.5, 0.5, ConditionalOnL(3)).flags == ()

    def test_high_photon_rate_flag(self):
        r = sliver_error(gaussian_stats(1.0), .5, .5, UnconditionalOnM(10, 0.5))
        assert r.flags == ("high_photon_rate",)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.0, 10.0), st.floats(0.0, 1.0), st.integers(0, 200))
    def test_helstrom_never_exceeds_schemes(self, d, p1, L):
        s = gaussian_stats(d)
        pmin = min_error_conditional(s, p1, 1 - p1, L).p_error
        for fn in (bspade_error, sliver_error):
            assert pmin <= fn(s, p1, 1 - p1, ConditionalOnL(L)).p_error + 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.0, 10.0))
    def test_bspade_beats_sliver(self, d):
        s = gaussian_stats(d)
        assert bspade_error(s, .5, .5, ConditionalOnL(4)).beta <= \
            sliver_error(s, .5, .5, ConditionalOnL(4)).beta + 1e-15


class TestExponents:
    def test_bspade_matches_quantum(self):
        for d in (0.1, 1.0, 4.0):
            s = gaussian_stats(d)
            assert bspade_exponent(s).exponent == quantum_chernoff(s).exponent

    def test_sliver_values(self):
        assert sliver_exponent(gaussian_stats(10.0)).exponent == pytest.approx(0.693143, abs=1e-6)
        assert sliver_exponent(gaussian_stats(0.0)).exponent == 0.0
        s = gaussian_stats(1e-3)
        assert sliver_exponent(s).exponent == pytest.approx(1e-6 / 16, rel=1e-5)

    @pytest.mark.parametrize("d", [0.05, 0.1, 0.2, 0.3])
    def test_sliver_taylor(self, d):
        assert sliver_exponent(gaussian_stats(d)).exponent == pytest.approx(d**2 / 16 - d**4 / 512, abs=1e-6)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.0, 40.0))
    def test_sliver_at_most_quantum(self, d):
        s = gaussian_stats(d)
        assert sliver_exponent(s).exponent <= quantum_chernoff(s).exponent + 1e-15


class TestDirectImaging:
    @pytest.mark.parametrize("d", sorted(DIRECT_ORACLE))
    def test_exponent_and_F_match_oracle(self, gaussian, d):
        xi, F = DIRECT_ORACLE[d]
        assert direct_imaging_exponent(gaussian, d).exponent == pytest.approx(xi, rel=1e-9)
        assert bhattacharyya(gaussian, d) == pytest.approx(F, abs=1e-12)

    @pytest.mark.parametrize("d", [0.7, 3.0])
    def test_zeta_against_scipy(self, d):
        for s in (0.2, 0.5, 0.9):
            assert gaussian_zeta(s, d) == pytest.approx(scipy_zeta(s, d), abs=1e-13)

    def test_two_dimensional_quadrature_agrees(self, gaussian):
        d = 2.0
        assert bhattacharyya(gaussian, d, method="quadrature") == pytest.approx(DIRECT_ORACLE[d][1], abs=1e-9)
        r = direct_imaging_exponent(gaussian, d, method="quadrature")
        assert r.exponent == pytest.approx(DIRECT_ORACLE[d][0], rel=1e-6)

    def test_hermite_option_is_close(self, gaussian):
        r = direct_imaging_exponent(gaussian, 2.0, method="hermite")
        assert r.exponent == pytest.approx(DIRECT_ORACLE[2.0][0], rel=1e-6)

    def test_s_star_matches_grid_search(self, gaussian):
        r = direct_imaging_exponent(gaussian, 2.0)
        grid = np.linspace(0.01, 0.99, 99)
        # Lambda_1^s Lambda_2^(1-s) convention: zeta is evaluated at 1 - s
        best = grid[np.argmin([scipy_zeta(1 - s, 2.0) for s in grid])]
        assert r.s_star == pytest.approx(best, abs=0.011)
        assert 0.0 < r.s_star < 1.0

    @pytest.mark.parametrize("d", [0.3, 2.0, 7.0])
    def test_zeta_endpoints_are_one(self, d):
        assert gaussian_zeta(0.0, d) == pytest.approx(1.0, abs=1e-10)
        assert gaussian_zeta(1.0, d) == pytest.approx(1.0, abs=1e-10)

    def test_small_d_scaling(self, gaussian):
        d = 0.05
        ratio = direct_imaging_exponent(gaussian, d).exponent / (d**4 / 256)
        assert ratio == pytest.approx(1.0, abs=1e-3)

    def test_zero_separation(self, gaussian):
        assert direct_imaging_exponent(gaussian, 0.0).exponent == 0.0
        assert bhattacharyya(gaussian, 0.0) == 1.0

    def test_sampled_psf_close_to_gaussian(self, sampled_gaussian):
        r = direct_imaging_exponent(sampled_gaussian, 2.0)
        assert r.exponent == pytest.approx(DIRECT_ORACLE[2.0][0], rel=1e-6)
        assert bhattacharyya(sampled_gaussian, 2.0) == pytest.approx(DIRECT_ORACLE[2.0][1], abs=1e-8)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.05, 6.0))
    def test_direct_below_sliver_below_quantum_small_d(self, d):
        g = PointSpreadFunction.gaussian()
        s = gaussian_stats(d)
        xi_d = direct_imaging_exponent(g, d).exponent
        assert xi_d <= quantum_chernoff(s).exponent
        if d <= 5.0:
            assert xi_d <= sliver_exponent(s).exponent


class TestBounds:
    def test_values_at_d2(self):
        xi, F = DIRECT_ORACLE[2.0]
        b = direct_imaging_bounds(F, xi, 5)
        assert b.lower == pytest.approx(0.22635739088, abs=1e-10)
        assert b.upper == pytest.approx(0.418148215304, abs=1e-11)

    def test_half_F(self):
        b = direct_imaging_bounds(0.5, math.log(2), 5)
        assert b.lower == pytest.approx(0.5 * (1 - math.sqrt(1 - 0.5**10)), rel=1e-12)
        assert b.upper == pytest.approx(0.015625, rel=1e-12)

    def test_tiny_F_power_no_cancellation(self):
        b = direct_imaging_bounds(0.5, math.log(2), 100)
        assert b.lower == pytest.approx(0.25 * 0.5**200, rel=1e-12)

    def test_no_photons(self):
        b = direct_imaging_bounds(0.9, 0.1, 0)
        assert b.lower == pytest.approx(0.5) and b.upper == pytest.approx(0.5)

    def test_rejects_unequal_priors_and_bad_F(self):
        with pytest.raises(DomainError):
            direct_imaging_bounds(0.9, 0.1, 3, p1=0.4, p2=0.6)
        with pytest.raises(DomainError):
            direct_imaging_bounds(0.0, 0.1, 3)
        with pytest.raises(DomainError):
            direct_imaging_bounds(1.2, 0.1, 3)

    @pytest.mark.parametrize("d", [0.5, 2.0, 5.0])
    def test_lower_below_upper_and_helstrom(self, gaussian, d):
        xi, F = DIRECT_ORACLE[d]
        s = gaussian_stats(d)
        for L in (1, 3, 10, 40):
            b = direct_imaging_bounds(F, xi, L)
            assert b.lower <= b.upper
            assert min_error_conditional(s, .5, .5, L).p_error <= b.upper

    def test_unconditional_average(self):
        xi, F = DIRECT_ORACLE[2.0]
        b = direct_imaging_bounds_unconditional(F, xi, 1, 0.3)
        one = direct_imaging_bounds(F, xi, 1)
        assert b.lower == pytest.approx(0.7 * 0.5 + 0.3 * one.lower, rel=1e-13)
        assert b.upper == pytest.approx(0.7 * 0.5 + 0.3 * one.upper, rel=1e-13)


class TestClassicalChernoff:
    def test_bernoulli_boundary_minimum(self):
        r = classical_chernoff([0.5, 0.5], [1.0, 0.0])
        assert r.exponent == pytest.approx(math.log(2), abs=1e-12)
        assert r.s_star == 1.0

    def test_bspade_outcome_pair(self):
        s = gaussian_stats(2.0)
        chi2 = s.chi ** 2
        r = classical_chernoff([1.0, 0.0], [chi2, 1 - chi2], scheme=Scheme.BSPADE)
        assert r.exponent == pytest.approx(0.25, abs=1e-12)
        assert r.exponent == pytest.approx(bspade_exponent(s).exponent, abs=1e-9)
        assert r.s_star == 0.0
        assert r.scheme is Scheme.BSPADE

    def test_sliver_outcome_pair(self):
        s = gaussian_stats(2.0)
        r = classical_chernoff([1.0, 0.0], [s.lambda_plus, s.lambda_minus])
        assert r.exponent == pytest.approx(0.2190701963798386, abs=1e-12)
        assert r.exponent == pytest.approx(sliver_exponent(s).exponent, abs=1e-9)

    def test_identical_distributions(self):
        r = classical_chernoff([0.2, 0.3, 0.5], [0.2, 0.3, 0.5])
        assert r.exponent == pytest.approx(0.0, abs=1e-15)
        assert r.s_star == 0.5

    def test_disjoint_supports(self):
        assert classical_chernoff([1.0, 0.0], [0.0, 1.0]).exponent == math.inf

    def test_matches_scipy_minimizer(self):
        p = np.array([0.1, 0.2, 0.3, 0.4])
        q = np.array([0.4, 0.3, 0.2, 0.1])
        res = optimize.minimize_scalar(lambda s: np.sum(p**s * q ** (1 - s)), bounds=(0, 1),
                                       method="bounded", options={"xatol": 1e-12})
        r = classical_chernoff(p, q)
        assert r.exponent == pytest.approx(-math.log(res.fun), rel=1e-12)
        assert r.s_star == pytest.approx(0.5, abs=1e-6)

    def test_gaussian_shift_1d(self):
        # two unit normals 1 apart: Chernoff distance 1/8 at s = 1/2
        n = lambda mu: (lambda x: np.exp(-(x - mu) ** 2 / 2) / math.sqrt(2 * math.pi))  # noqa: E731
        r = classical_chernoff(n(0.0), n(1.0), bounds=[(-15, 16)])
        assert r.exponent == pytest.approx(0.125, abs=1e-10)
        assert r.s_star == pytest.approx(0.5, abs=1e-5)

    def test_unnormalized_input_raises(self):
        with pytest.raises(OptimizationFailure):
            classical_chernoff([0.8, 0.8], [0.5, 0.5])

    def test_mixed_inputs_rejected(self):
        with pytest.raises(DomainError):
            classical_chernoff([0.5, 0.5], lambda x: x)
