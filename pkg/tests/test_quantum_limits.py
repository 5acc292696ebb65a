import math
from functools import reduce

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onevstwo.common import ConditionalOnL, Scheme
from onevstwo.errors import DomainError
from onevstwo.psf import OverlapStats, gaussian_stats
from onevstwo.quantum_limits import (Scenario, gamma_trace_norm_oracle, log_binomial_weights,
                                     min_error_approx, min_error_conditional,
                                     min_error_unconditional, quantum_chernoff)

# Helstrom error from an explicit 3-D single-photon model tensored L times
BRUTE_D2_L5_EQUAL = 0.1344411343486095
BRUTE_D2_L1_P09 = 0.07764907601874149
# mpmath (dps 120) evaluations at d = 2, equal priors
MP_UNCOND_M1000 = 0.05216311041943832
MP_COND_L200 = 9.6437492398195889e-23
MP_COND_L400 = 1.8600379880104180e-44


def single_photon_states(stats):
    """Orthonormal-basis vectors for psi_1 and the two displaced copies."""
    c, delta = stats.chi, stats.delta_d
    gram = np.array([[1, c, c], [c, 1, delta], [c, delta, 1]])
    return np.linalg.cholesky(gram).T  # columns: psi_1, psi_+d/2, psi_-d/2


def brute_force_min_error(stats, p1, p2, L):
    vecs = single_photon_states(stats)
    rho1 = np.outer(vecs[:, 0], vecs[:, 0])
    rho2 = 0.5 * (np.outer(vecs[:, 1], vecs[:, 1]) + np.outer(vecs[:, 2], vecs[:, 2]))
    r1 = reduce(np.kron, [rho1] * L)
    r2 = reduce(np.kron, [rho2] * L)
    eig = np.linalg.eigvalsh(p2 * r2 - p1 * r1)
    return 0.5 * (1 - np.sum(np.abs(eig)))


def mp_conditional(d, p1, p2, L):
    with mpmath.workdps(120):
        delta = mpmath.exp(-mpmath.mpf(d) ** 2 / 8)
        chi = mpmath.exp(-mpmath.mpf(d) ** 2 / 32)
        lam = (1 + delta) / 2
        a = p1 + p2 * lam**L
        return float(a / 2 * (1 - mpmath.sqrt(1 - 4 * p1 * p2 * chi ** (2 * L) / a**2)))


class TestConditional:
    def test_brute_force_equal_priors(self):
        st_ = gaussian_stats(2.0)
        assert brute_force_min_error(st_, 0.5, 0.5, 5) == pytest.approx(BRUTE_D2_L5_EQUAL, abs=1e-12)
        r = min_error_conditional(st_, 0.5, 0.5, 5)
        assert r.p_error == pytest.approx(BRUTE_D2_L5_EQUAL, abs=1e-12)
        assert r.alpha is None and r.beta is None
        assert r.scheme is Scheme.QUANTUM_LIMIT and r.conditioning == ConditionalOnL(5)

    def test_brute_force_unequal_priors(self):
        r = min_error_conditional(gaussian_stats(2.0), 0.9, 0.1, 1)
        assert r.p_error == pytest.approx(BRUTE_D2_L1_P09, abs=1e-12)

    @pytest.mark.parametrize("d", [0.3, 1.0, 3.0])
    @pytest.mark.parametrize("p1", [0.5, 0.2, 0.8])
    @pytest.mark.parametrize("L", [1, 2, 4])
    def test_against_tensor_power(self, d, p1, L):
        s = gaussian_stats(d)
        expected = brute_force_min_error(s, p1, 1 - p1, L)
        assert min_error_conditional(s, p1, 1 - p1, L).p_error == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize("L", range(1, 9))
    def test_against_gamma_oracle(self, L):
        s = gaussian_stats(1.3)
        for p1 in (0.5, 0.3, 0.7):
            assert min_error_conditional(s, p1, 1 - p1, L).p_error == pytest.approx(
                gamma_trace_norm_oracle(s, p1, 1 - p1, L), abs=1e-12)

    def test_large_L_no_underflow(self):
        s = gaussian_stats(2.0)
        assert min_error_conditional(s, .5, .5, 200).p_error == pytest.approx(MP_COND_L200, rel=1e-9)
        p400 = min_error_conditional(s, .5, .5, 400).p_error
        assert p400 == pytest.approx(MP_COND_L400, rel=1e-9)
        assert -math.log(p400) / 400 == pytest.approx(0.25, rel=0.02)

    @pytest.mark.parametrize("d,p1,L", [(0.5, 0.5, 30), (1.5, 0.7, 60), (4.0, 0.3, 10)])
    def test_against_mpmath(self, d, p1, L):
        s = gaussian_stats(d)
        assert min_error_conditional(s, p1, 1 - p1, L).p_error == pytest.approx(
            mp_conditional(d, p1, 1 - p1, L), rel=1e-10)

    def test_no_photons_is_prior_guess(self):
        assert min_error_conditional(gaussian_stats(2.0), 0.3, 0.7, 0).p_error == pytest.approx(0.3)

    def test_coincident_sources(self):
        assert min_error_conditional(gaussian_stats(0.0), 0.4, 0.6, 7).p_error == pytest.approx(0.4)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.0, 8.0), st.floats(0.0, 1.0), st.integers(0, 300))
    def test_bounded_by_smaller_prior(self, d, p1, L):
        p = min_error_conditional(gaussian_stats(d), p1, 1 - p1, L).p_error
        assert 0.0 <= p <= min(p1, 1 - p1) + 1e-15

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.05, 6.0), st.floats(0.01, 0.99), st.integers(0, 100))
    def test_nonincreasing_in_L(self, d, p1, L):
        s = gaussian_stats(d)
        a = min_error_conditional(s, p1, 1 - p1, L).p_error
        b = min_error_conditional(s, p1, 1 - p1, L + 1).p_error
        assert b <= a * (1 + 1e-12)

    def test_rejects_bad_inputs(self):
        s = gaussian_stats(1.0)
        with pytest.raises(DomainError):
            min_error_conditional(s, 0.6, 0.6, 3)
        with pytest.raises(DomainError):
            min_error_conditional(s, 0.5, 0.5, -1)
        with pytest.raises(DomainError):
            min_error_conditional(s, 0.5, 0.5, 2.5)


class TestUnconditional:
    def test_against_mpmath(self):
        r = min_error_unconditional(gaussian_stats(2.0), Scenario(2.0, M=1000, epsilon=0.01))
        assert r.p_error == pytest.approx(MP_UNCOND_M1000, rel=1e-10)
        assert r.flags == ()

    def test_single_mode_identity(self):
        s = gaussian_stats(1.5)
        for eps in (0.01, 0.3, 0.9):
            got = min_error_unconditional(s, Scenario(1.5, 0.3, 0.7, eps, 1)).p_error
            expected = (1 - eps) * 0.3 + eps * min_error_conditional(s, 0.3, 0.7, 1).p_error
            assert got == pytest.approx(expected, rel=1e-13)

    def test_high_photon_rate_flag(self):
        r = min_error_unconditional(gaussian_stats(1.0), Scenario(1.0, epsilon=0.2, M=50))
        assert "high_photon_rate" in r.flags

    @pytest.mark.parametrize("M,eps", [(1, 0.5), (10, 0.01), (1000, 0.01), (5000, 0.3), (20000, 0.999)])
    def test_binomial_weights_sum_to_one(self, M, eps):
        w = [math.exp(lw) for _, lw in log_binomial_weights(M, eps)]
        assert math.fsum(w) == pytest.approx(1.0, abs=1e-13)

    def test_binomial_weights_visit_each_L_once(self):
        Ls = [L for L, _ in log_binomial_weights(300, 0.2)]
        assert len(Ls) == len(set(Ls))
        assert all(0 <= L <= 300 for L in Ls)


class TestApprox:
    def test_value_at_d2(self):
        a = min_error_approx(gaussian_stats(2.0), .5, .5, 5)
        assert a.value == pytest.approx(0.1073516292928445, rel=1e-12)
        assert a.upper_bound == pytest.approx(0.5 * math.exp(-1.25), rel=1e-12)
        assert a.precondition_met

    def test_converges_to_exact(self):
        s = gaussian_stats(2.0)
        ratio = min_error_approx(s, .5, .5, 50).value / min_error_conditional(s, .5, .5, 50).p_error
        assert ratio == pytest.approx(1.0, abs=1e-5)

    def test_precondition_threshold(self):
        s = gaussian_stats(1.0)
        threshold = math.log(0.9 / 0.1) / (2 * math.log(s.chi))
        threshold = abs(threshold)
        # log(p1/p2) > 0 and log chi < 0: the raw threshold is negative, always met
        assert min_error_approx(s, 0.9, 0.1, 1).precondition_met
        need = math.ceil(10 * threshold)
        assert not min_error_approx(s, 0.1, 0.9, need - 1).precondition_met
        assert min_error_approx(s, 0.1, 0.9, need).precondition_met

    def test_chi_one(self):
        s = gaussian_stats(0.0)
        assert not min_error_approx(s, 0.5, 0.5, 10).precondition_met
        with pytest.raises(DomainError):
            min_error_approx(s, 0.3, 0.7, 10, require_valid=True)


class TestQuantumChernoff:
    def test_gaussian_closed_form(self):
        for d in (0.0, 0.5, 2.0, 6.0):
            assert quantum_chernoff(gaussian_stats(d)).exponent == pytest.approx(d * d / 16, abs=1e-15)
        assert quantum_chernoff(gaussian_stats(2.0)).s_star == 0.5

    def test_orthogonal_and_negative(self):
        assert quantum_chernoff(OverlapStats.from_overlaps(0.0, 0.0)).exponent == math.inf
        with pytest.raises(DomainError):
            quantum_chernoff(OverlapStats.from_overlaps(0.1, -0.2))


def test_gamma_oracle_range():
    with pytest.raises(DomainError):
        gamma_trace_norm_oracle(gaussian_stats(1.0), 0.5, 0.5, 9)
