"""Helstrom-limit error probabilities and the quantum Chernoff exponent.

Every power lambda_+^L, chi^(2L) and every binomial weight is accumulated
in the log domain and exponentiated once, so L and M in the thousands are
handled without underflow in intermediate steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from ._math import log_abs, safe_exp
from .common import (ConditionalOnL, Conditioning, Scheme, UnconditionalOnM,
                     check_priors)
from .errors import DomainError
from .psf import OverlapStats

EPSILON_WARNING_THRESHOLD = 0.1
BINOMIAL_TAIL_TOL = 1e-15
# "L >> threshold" is read as L >= 10 * threshold
APPROX_VALIDITY_FACTOR = 10.0


@dataclass(frozen=True)
class Scenario:
    d: float
    p1: float = 0.5
    p2: float = 0.5
    epsilon: float = 0.01
    M: int = 1000

    def __post_init__(self):
        if not math.isfinite(self.d) or self.d < 0:
            raise DomainError(f"separation d must be finite and >= 0, got {self.d!r}")
        check_priors(self.p1, self.p2)
        UnconditionalOnM(self.M, self.epsilon)  # range checks

    @property
    def high_photon_rate(self) -> bool:
        """True when epsilon is outside the weak-source regime of the one-photon model."""
        return self.epsilon > EPSILON_WARNING_THRESHOLD

    @property
    def conditioning(self) -> UnconditionalOnM:
        return UnconditionalOnM(self.M, self.epsilon)


@dataclass(frozen=True)
class ErrorReport:
    """Type-I/II and average error of one scheme.

    ``alpha`` and ``beta`` are None where only the average error is defined
    (the Helstrom limit).  ``flags`` carries validity notes such as
    ``"high_photon_rate"`` or ``"simplified_rule_not_lrt"``.
    """

    alpha: float | None
    beta: float | None
    p_error: float
    conditioning: Conditioning
    scheme: Scheme
    flags: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class ChernoffResult:
    exponent: float
    s_star: float
    scheme: Scheme
    iterations: int = 0
    achieved_tol: float = 0.0


@dataclass(frozen=True)
class ApproxError:
    value: float
    upper_bound: float
    precondition_met: bool


def _log_conditional_min_error(stats: OverlapStats, p1: float, p2: float, L: int) -> float:
    log_lam = L * math.log(stats.lambda_plus)
    a = p1 + p2 * math.exp(log_lam)
    if p1 == 0.0 or p2 == 0.0 or a == 0.0:
        return -math.inf
    log_chi2L = 2 * L * log_abs(stats.chi)
    if log_chi2L == -math.inf:
        return -math.inf
    # (a/2)(1 - sqrt(1 - x)) == (a/2) x / (1 + sqrt(1 - x)), x = 4 p1 p2 chi^2L / a^2
    log_x = math.log(4 * p1 * p2) + log_chi2L - 2 * math.log(a)
    x = min(math.exp(log_x), 1.0)
    return math.log(a / 2) + min(log_x, 0.0) - math.log1p(math.sqrt(max(0.0, 1.0 - x)))


def _check_L(L: int, minimum: int = 0) -> int:
    if isinstance(L, bool) or int(L) != L or L < minimum:
        raise DomainError(f"L must be an integer >= {minimum}, got {L!r}")
    return int(L)


def min_error_conditional(stats: OverlapStats, p1: float, p2: float, L: int) -> ErrorReport:
    """Minimum error over all measurements given exactly ``L`` detected photons.

    Evaluated through the rearrangement (a/2) x / (1 + sqrt(1 - x)), which
    avoids cancellation once chi^(2L) is small.
    """
    check_priors(p1, p2)
    L = _check_L(L)
    p = safe_exp(_log_conditional_min_error(stats, p1, p2, L))
    return ErrorReport(None, None, min(p, min(p1, p2)), ConditionalOnL(L), Scheme.QUANTUM_LIMIT)


def log_binomial_weights(M: int, epsilon: float,
                         tail_tol: float = BINOMIAL_TAIL_TOL) -> Iterator[tuple[int, float]]:
    """Yield ``(L, log P(L))`` for L ~ Binomial(M, epsilon), outward from the mode.

    Iteration stops once a geometric bound on the probability left in both
    unvisited tails falls below ``tail_tol``.  The visited weights are
    renormalized to sum to one, which removes the lgamma rounding (~1e-12
    relative at M ~ 1e3).
    """
    visited = list(_raw_log_binomial_weights(M, epsilon, tail_tol))
    lse = max(lw for _, lw in visited)
    log_total = lse + math.log(math.fsum(math.exp(lw - lse) for _, lw in visited))
    for L, lw in visited:
        yield L, lw - log_total


def _raw_log_binomial_weights(M: int, epsilon: float, tail_tol: float):
    log_eps, log_1m = math.log(epsilon), math.log1p(-epsilon)
    lg_M1 = math.lgamma(M + 1)

    def logw(L):
        return lg_M1 - math.lgamma(L + 1) - math.lgamma(M - L + 1) + L * log_eps + (M - L) * log_1m

    mode = min(M, int(math.floor((M + 1) * epsilon)))
    yield mode, logw(mode)
    up, down = mode + 1, mode - 1
    up_left = down_left = math.inf
    while True:
        # ratio of successive weights; both are monotone away from the mode
        if up <= M:
            lw = logw(up)
            r = (M - up) / (up + 1) * epsilon / (1 - epsilon)
            up_left = math.exp(lw) * r / (1 - r) if r < 1 else math.inf
            yield up, lw
            up += 1
        else:
            up_left = 0.0
        if down >= 0:
            lw = logw(down)
            r = down / (M - down + 1) * (1 - epsilon) / epsilon
            down_left = math.exp(lw) * r / (1 - r) if r < 1 else math.inf
            yield down, lw
            down -= 1
        else:
            down_left = 0.0
        if up_left + down_left < tail_tol:
            return


def min_error_unconditional(stats: OverlapStats, scenario: Scenario) -> ErrorReport:
    """Binomial average of the conditional minimum error over M temporal modes."""
    p1, p2 = scenario.p1, scenario.p2
    terms = [safe_exp(lw + _log_conditional_min_error(stats, p1, p2, L))
             for L, lw in log_binomial_weights(scenario.M, scenario.epsilon)]
    flags = ("high_photon_rate",) if scenario.high_photon_rate else ()
    return ErrorReport(None, None, math.fsum(terms), scenario.conditioning,
                       Scheme.QUANTUM_LIMIT, flags)


def min_error_approx(stats: OverlapStats, p1: float, p2: float, L: int,
                     require_valid: bool = False) -> ApproxError:
    """Large-L approximation p1 p2 chi^2L / (p1 + p2 lambda_+^L) and the looser p2 chi^2L.

    ``precondition_met`` reports whether L >= 10 log(p1/p2) / (2 log chi);
    it is False whenever chi = 1 because the error then does not decay.
    With ``require_valid`` an unsatisfiable precondition (chi = 1 with
    unequal priors) raises DomainError.
    """
    check_priors(p1, p2)
    L = _check_L(L, 1)
    log_chi = log_abs(stats.chi)
    if log_chi == 0.0:
        met = False
        if require_valid and p1 != p2:
            raise DomainError("chi = 1: no L satisfies the large-L precondition for unequal priors")
    elif p1 == 0.0 or p2 == 0.0:
        met = True
    else:
        threshold = math.log(p1 / p2) / (2 * log_chi)
        met = L >= APPROX_VALIDITY_FACTOR * max(threshold, 0.0)
    chi2L = safe_exp(2 * L * log_chi)
    value = p1 * p2 * chi2L / (p1 + p2 * safe_exp(L * math.log(stats.lambda_plus)))
    return ApproxError(value, p2 * chi2L, met)


def quantum_chernoff(stats: OverlapStats) -> ChernoffResult:
    """Quantum Chernoff exponent -2 log chi (minimizer s = 1/2)."""
    if stats.chi < 0:
        raise DomainError(f"quantum Chernoff exponent needs chi >= 0, got {stats.chi!r}")
    exponent = math.inf if stats.chi == 0 else -2.0 * math.log(stats.chi)
    return ChernoffResult(max(exponent, 0.0), 0.5, Scheme.QUANTUM_LIMIT)


def gamma_trace_norm_oracle(stats: OverlapStats, p1: float, p2: float, L: int) -> float:
    """Minimum error for L photons via explicit diagonalization of Gamma.

    Builds the Gram matrix of phi_+^(xL) and psi_1^(xL), whose overlap is
    (chi / sqrt(lambda_+))^L, writes
    Gamma = p2 lambda_+^L |phi_+><phi_+| - p1 |psi_1><psi_1| in an orthonormal
    basis of their span and sums the absolute eigenvalues.
    """
    check_priors(p1, p2)
    if isinstance(L, bool) or int(L) != L or not 1 <= L <= 8:
        raise DomainError(f"oracle supports 1 <= L <= 8, got {L!r}")
    lam_L = stats.lambda_plus ** L
    c = (stats.chi / math.sqrt(stats.lambda_plus)) ** L
    gram = np.array([[1.0, c], [c, 1.0]])
    # Gram-Schmidt coordinates of the two vectors in their span
    u = np.array([1.0, 0.0])
    v = np.array([gram[0, 1], math.sqrt(max(0.0, gram[1, 1] - gram[0, 1] ** 2))])
    gamma = p2 * lam_L * np.outer(u, u) - p1 * np.outer(v, v)
    trace_norm = float(np.sum(np.abs(np.linalg.eigvalsh(gamma))))
    return 0.5 * (1.0 - trace_norm - p2 * (1.0 - lam_L))
