"""Error models and Chernoff exponents for B-SPADE, SLIVER and direct imaging.

B-SPADE and SLIVER use the simplified decision rules: declare two sources
iff any photon lands outside the psi_1 mode (B-SPADE) or at the
antisymmetric port (SLIVER).  Neither rule needs d or the priors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._math import log_abs, logcosh, safe_exp
from .common import ConditionalOnL, Conditioning, Scheme, UnconditionalOnM, check_priors
from .errors import DomainError, OptimizationFailure
from .optimize import golden_parabolic_minimize
from .psf import PointSpreadFunction, PsfKind, OverlapStats, _check_separation, _trapezoid_weights, direct_image_density, ensure_valid
from .quadrature import integrate_1d, integrate_2d, normal_rule
from .quantum_limits import ChernoffResult, ErrorReport, log_binomial_weights, quantum_chernoff

NORMALIZATION_SLACK = 1e-9
HERMITE_ORDER = 64
HERMITE_ORDER_WIDE = 128


@dataclass(frozen=True)
class DirectImagingBounds:
    lower: float
    upper: float
    F: float


def _binary_scheme_error(log_q: float, p1: float, p2: float, conditioning: Conditioning,
                         scheme: Scheme) -> ErrorReport:
    """Errors of a rule that says H2 iff any photon clicks a port H1 never reaches.

    ``log_q`` is the log-probability that a single H2 photon does *not*
    click that port (chi^2 for B-SPADE, lambda_+ for SLIVER).
    """
    check_priors(p1, p2)
    if isinstance(conditioning, ConditionalOnL):
        log_beta = conditioning.L * log_q
    elif isinstance(conditioning, UnconditionalOnM):
        eps = conditioning.epsilon
        # 1 - eps + eps q, written to keep precision when q is near 1
        log_beta = conditioning.M * math.log1p(-eps * -math.expm1(log_q)) if log_q > -math.inf \
            else conditioning.M * math.log1p(-eps)
    else:
        raise DomainError(f"unsupported conditioning {conditioning!r}")
    beta = safe_exp(log_beta)
    flags = []
    if isinstance(conditioning, ConditionalOnL) and p2 > 0 and beta > p1 / p2:
        flags.append("simplified_rule_not_lrt")
    if isinstance(conditioning, UnconditionalOnM) and conditioning.epsilon > 0.1:
        flags.append("high_photon_rate")
    return ErrorReport(0.0, beta, p2 * beta, conditioning, scheme, tuple(flags))


def bspade_error(stats: OverlapStats, p1: float, p2: float, conditioning: Conditioning) -> ErrorReport:
    """B-SPADE: alpha = 0, beta = chi^(2L); unconditionally p2 (1 - eps + eps chi^2)^M."""
    return _binary_scheme_error(2 * log_abs(stats.chi), p1, p2, conditioning, Scheme.BSPADE)


def sliver_error(stats: OverlapStats, p1: float, p2: float, conditioning: Conditioning) -> ErrorReport:
    """SLIVER: alpha = 0, beta = lambda_+^L; unconditionally p2 (1 - eps + eps lambda_+)^M."""
    return _binary_scheme_error(math.log(stats.lambda_plus), p1, p2, conditioning, Scheme.SLIVER)


def bspade_exponent(stats: OverlapStats) -> ChernoffResult:
    q = quantum_chernoff(stats)
    return ChernoffResult(q.exponent, 0.5, Scheme.BSPADE)


def sliver_exponent(stats: OverlapStats) -> ChernoffResult:
    if stats.lambda_plus <= 0:
        raise DomainError(f"lambda_+ must be positive, got {stats.lambda_plus!r}")
    # -log(1 - lambda_-) keeps precision for small separations
    return ChernoffResult(max(-math.log1p(-stats.lambda_minus), 0.0), 0.5, Scheme.SLIVER)


def minimize_chernoff(coefficient: Callable[[float], float], scheme: Scheme,
                      flat_tol: float = 1e-15) -> ChernoffResult:
    """Turn a Chernoff coefficient s -> integral of p1^s p2^(1-s) into an exponent.

    The coefficient must not exceed 1 + 1e-9 anywhere it is evaluated;
    a larger value means the inputs were not normalized.
    """
    seen = []

    def checked(s):
        v = coefficient(s)
        if not v <= 1.0 + NORMALIZATION_SLACK:
            raise OptimizationFailure(
                f"Chernoff coefficient {v!r} exceeds 1 at s={s:.6g}: inputs not normalized")
        seen.append(v)
        return v

    m = golden_parabolic_minimize(checked, 0.0, 1.0)
    s_star = m.x
    if max(seen) - min(seen) <= flat_tol:
        s_star = 0.5
    value = min(max(m.fx, 0.0), 1.0)
    exponent = math.inf if value == 0.0 else -math.log(value)
    return ChernoffResult(max(exponent, 0.0), s_star, scheme, m.iterations, m.achieved_tol)


def discrete_chernoff_coefficient(p1: np.ndarray, p2: np.ndarray, s: float) -> float:
    """Sum of p1^s p2^(1-s) over the common support of the two distributions.

    Outcomes that one hypothesis cannot produce are dropped for every s,
    which makes the coefficient continuous at s = 0 and s = 1.
    """
    both = (p1 > 0) & (p2 > 0)
    a, b = p1[both], p2[both]
    return float(np.sum(np.exp(s * np.log(a) + (1 - s) * np.log(b))))


def classical_chernoff(density1, density2, *, bounds: Sequence[tuple[float, float]] | None = None,
                       tol: float = 1e-12, scheme: Scheme = Scheme.DIRECT_IMAGING) -> ChernoffResult:
    """Chernoff distance -log min_s integral of density1^s density2^(1-s).

    ``density1`` and ``density2`` are either probability vectors over the
    same outcomes or vectorized callables; callables require ``bounds``, one
    ``(lo, hi)`` pair per dimension (1-D or 2-D).
    """
    if callable(density1) != callable(density2):
        raise DomainError("both densities must be discrete or both continuous")
    if not callable(density1):
        p1 = np.asarray(density1, dtype=float)
        p2 = np.asarray(density2, dtype=float)
        if p1.shape != p2.shape or p1.ndim != 1:
            raise DomainError("discrete distributions must be 1-D arrays of equal length")
        if np.any(p1 < 0) or np.any(p2 < 0):
            raise DomainError("probabilities must be nonnegative")
        return minimize_chernoff(lambda s: discrete_chernoff_coefficient(p1, p2, s), scheme)

    if bounds is None or len(bounds) not in (1, 2):
        raise DomainError("continuous densities need 1-D or 2-D integration bounds")

    def integrand(s):
        def g(*xs):
            a = np.asarray(density1(*xs), dtype=float)
            b = np.asarray(density2(*xs), dtype=float)
            out = np.zeros(np.broadcast(a, b).shape)
            both = (a > 0) & (b > 0)
            a, b = np.broadcast_to(a, out.shape), np.broadcast_to(b, out.shape)
            out[both] = np.exp(s * np.log(a[both]) + (1 - s) * np.log(b[both]))
            return out
        return g

    if len(bounds) == 1:
        coef = lambda s: integrate_1d(integrand(s), *bounds[0], tol=tol)  # noqa: E731
    else:
        coef = lambda s: integrate_2d(integrand(s), bounds[0], bounds[1], tol=tol)  # noqa: E731
    return minimize_chernoff(coef, scheme)


def _hermite_order(d: float) -> int:
    return HERMITE_ORDER_WIDE if d > 6 else HERMITE_ORDER


def _zeta_minus_one(s: float, d: float, method: str = "auto", order: int | None = None) -> float:
    if method == "hermite":
        x, w = normal_rule(order or _hermite_order(d))
        g = logcosh(x * d / 2) - d * d / 8
        return float(np.dot(w, np.expm1(s * g)))
    if method != "auto":
        raise DomainError(f"unknown zeta method {method!r}")
    # even integrand: twice the half line; beyond d/2 + 12 the weight is < 1e-30
    c = 1.0 / math.sqrt(2.0 * math.pi)

    def f(x):
        return c * np.exp(-0.5 * x * x) * np.expm1(s * (logcosh(x * d / 2) - d * d / 8))

    return 2.0 * integrate_1d(f, 0.0, d / 2 + 12.0, tol=1e-15, order=16)


def gaussian_zeta(s: float, d: float, method: str = "auto", order: int | None = None) -> float:
    """exp(-s d^2/8) E[cosh^s(x d/2)] for X ~ N(0, 1).

    The default integrates 1 + E[expm1(s g(x))], g = log cosh(x d/2) - d^2/8,
    with adaptive Gauss-Legendre panels on the half line, which keeps full
    relative precision in 1 - zeta at small d.  ``method="hermite"`` uses a
    Gauss-Hermite rule of order 64 (128 for d > 6) instead; its error grows
    with d because cosh^s has a kink-like |x| growth that polynomials fit poorly.
    """
    return 1.0 + _zeta_minus_one(s, d, method, order)


def _log_gaussian_zeta(s: float, d: float, method: str = "auto") -> float:
    return math.log1p(_zeta_minus_one(s, d, method))


def _sampled_direct_coefficient(psf: PointSpreadFunction, d: float):
    gx, gy = np.meshgrid(psf.x, psf.y, indexing="ij")
    lam1 = direct_image_density(psf, 1, d, gx, gy)
    lam2 = direct_image_density(psf, 2, d, gx, gy)
    wts = _trapezoid_weights(psf)
    both = (lam1 > 0) & (lam2 > 0)
    la, lb, ww = np.log(lam1[both]), np.log(lam2[both]), wts[both]
    return lambda s: float(np.sum(ww * np.exp(s * la + (1 - s) * lb)))


def _direct_box(psf: PointSpreadFunction, d: float):
    w = max(psf.quadrature.half_width, d / 2 + psf.quadrature.half_width)
    return (-w, w), (-w, w)


def direct_imaging_exponent(psf: PointSpreadFunction, d: float, method: str = "auto") -> ChernoffResult:
    """Chernoff exponent of ideal direct imaging, minimized numerically over s.

    Gaussian PSF: ``"auto"`` and ``"hermite"`` minimize the one-dimensional
    coefficient zeta(s) (see ``gaussian_zeta``); ``"quadrature"`` integrates
    Lambda_1^s Lambda_2^(1-s) over the plane.  Sampled PSFs always use grid
    quadrature.  ``s_star`` follows the Lambda_1^s Lambda_2^(1-s) convention.
    """
    psf = ensure_valid(psf)
    d = _check_separation(d)
    if method not in ("auto", "hermite", "quadrature"):
        raise DomainError(f"unknown direct-imaging method {method!r}")
    if d == 0:
        return ChernoffResult(0.0, 0.5, Scheme.DIRECT_IMAGING)
    if psf.kind is PsfKind.GAUSSIAN_UNIT_SIGMA and method != "quadrature":
        res = minimize_chernoff(lambda s: math.exp(_log_gaussian_zeta(s, d, method)),
                                Scheme.DIRECT_IMAGING)
        log_min = _log_gaussian_zeta(res.s_star, d, method)
        # zeta(s) weights Lambda_2 by s
        return ChernoffResult(max(-log_min, 0.0), 1.0 - res.s_star, Scheme.DIRECT_IMAGING,
                              res.iterations, res.achieved_tol)
    if psf.kind is PsfKind.SAMPLED:
        return minimize_chernoff(_sampled_direct_coefficient(psf, d), Scheme.DIRECT_IMAGING)
    return classical_chernoff(lambda x, y: direct_image_density(psf, 1, d, x, y),
                              lambda x, y: direct_image_density(psf, 2, d, x, y),
                              bounds=_direct_box(psf, d), tol=psf.quadrature.tol)


def bhattacharyya(psf: PointSpreadFunction, d: float, method: str = "auto") -> float:
    """Bhattacharyya coefficient F of the two direct-imaging densities.

    Gaussian default: zeta(1/2) (``"hermite"`` selects the Gauss-Hermite
    rule).  ``method="quadrature"`` integrates sqrt(Lambda_1 Lambda_2) over the plane.
    """
    psf = ensure_valid(psf)
    d = _check_separation(d)
    if d == 0:
        return 1.0
    if psf.kind is PsfKind.GAUSSIAN_UNIT_SIGMA and method != "quadrature":
        return min(gaussian_zeta(0.5, d, "hermite" if method == "hermite" else "auto"), 1.0)
    if psf.kind is PsfKind.SAMPLED:
        return min(_sampled_direct_coefficient(psf, d)(0.5), 1.0)
    bx, by = _direct_box(psf, d)
    val = integrate_2d(lambda x, y: np.sqrt(direct_image_density(psf, 1, d, x, y)
                                            * direct_image_density(psf, 2, d, x, y)),
                       bx, by, tol=psf.quadrature.tol, order=psf.quadrature.order,
                       max_panels=psf.quadrature.max_panels)
    return min(val, 1.0)


def direct_imaging_bounds(F: float, exponent: float, L: int,
                          p1: float = 0.5, p2: float = 0.5) -> DirectImagingBounds:
    """Bracket the minimum direct-imaging error for L photons (equal priors only).

    lower = (1 - sqrt(1 - F^2L)) / 2, upper = exp(-L exponent) / 2.
    """
    check_priors(p1, p2)
    if p1 != p2:
        raise DomainError("direct-imaging bounds hold only for equal priors")
    if not 0.0 < F <= 1.0:
        raise DomainError(f"Bhattacharyya coefficient must lie in (0, 1], got {F!r}")
    if isinstance(L, bool) or int(L) != L or L < 0:
        raise DomainError(f"L must be a nonnegative integer, got {L!r}")
    if exponent < 0:
        raise DomainError(f"exponent must be >= 0, got {exponent!r}")
    F2L = math.exp(2 * L * math.log(F))
    lower = 0.5 * F2L / (1.0 + math.sqrt(max(0.0, 1.0 - F2L)))
    upper = 0.5 * safe_exp(-L * exponent) if exponent < math.inf else (0.5 if L == 0 else 0.0)
    return DirectImagingBounds(lower, upper, F)


def direct_imaging_bounds_unconditional(F: float, exponent: float, M: int,
                                        epsilon: float) -> DirectImagingBounds:
    """Binomial average over the photon count of the per-L direct-imaging bounds."""
    UnconditionalOnM(M, epsilon)
    lo, hi = [], []
    for L, lw in log_binomial_weights(M, epsilon):
        b = direct_imaging_bounds(F, exponent, L)
        w = math.exp(lw)
        lo.append(w * b.lower)
        hi.append(w * b.upper)
    return DirectImagingBounds(math.fsum(lo), math.fsum(hi), F)
