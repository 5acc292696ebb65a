"""Seeded photon-counting simulation of the three measurement schemes.

Each temporal mode carries at most one photon (probability epsilon).  A
detected photon under H2 clicks the B-SPADE complement port with
probability 1 - chi^2 and the SLIVER antisymmetric port with probability
lambda_-; under H1 neither port ever clicks.  Direct imaging records the
arrival position drawn from the H1 or H2 intensity.

Trials are stratified: exactly ``trials`` runs under each hypothesis.  They
are simulated in fixed blocks of ``BLOCK_SIZE`` trials, and block ``b``
under hypothesis ``h`` draws from its own Philox stream keyed by
``(seed, h, b)``, so the counts depend only on the seed and parameters,
never on how many workers process the blocks.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from ._math import logcosh
from .common import ConditionalOnL, Conditioning, Hypothesis, Scheme, UnconditionalOnM
from .errors import DomainError
from .psf import (PointSpreadFunction, PsfKind, OverlapStats, direct_image_density,
                  ensure_valid, overlap_stats)
from .quantum_limits import Scenario

BLOCK_SIZE = 4096
RNG_ID = f"numpy-philox4x32-10/seedseq-hypothesis-block/block{BLOCK_SIZE}/v1"
Z_95 = NormalDist().inv_cdf(0.975)


class DecisionRule(str, enum.Enum):
    SIMPLIFIED = "simplified"
    LIKELIHOOD_RATIO = "lr"


@dataclass(frozen=True, eq=False)
class TrialOutcome:
    detected_photons: int
    scheme_clicks: int | np.ndarray  # click count, or (L, 2) arrival positions
    decision: Hypothesis
    truth: Hypothesis


@dataclass(frozen=True)
class MonteCarloSummary:
    scheme: Scheme
    rule: DecisionRule
    conditioning: Conditioning
    p1: float
    p2: float
    trials: int
    false_alarms: int
    misses: int
    empirical_alpha: float
    empirical_beta: float
    empirical_p_error: float
    wilson_ci_95: dict[str, tuple[float, float]]
    standard_error: dict[str, float]
    seed: int
    rng_id: str = RNG_ID

    def contains(self, rate: str, value: float, slack: float = 0.0) -> bool:
        lo, hi = self.wilson_ci_95[rate]
        return lo - slack <= value <= hi + slack


def wilson_interval(count: int, n: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval; counts of 0 or n fall back to the rule of three."""
    if n <= 0:
        raise DomainError("interval needs at least one trial")
    if count == 0:
        return 0.0, min(1.0, 3.0 / n)
    if count == n:
        return max(0.0, 1.0 - 3.0 / n), 1.0
    p = count / n
    z2 = z * z
    centre = (p + z2 / (2 * n)) / (1 + z2 / n)
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n)
    return max(0.0, centre - half), min(1.0, centre + half)


def trial_generator(seed: int, hypothesis: Hypothesis, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(hypothesis), int(block)))
    return np.random.Generator(np.random.Philox(ss))


def _click_probability(stats: OverlapStats, scheme: Scheme, truth: Hypothesis) -> float:
    if truth is Hypothesis.H1:
        return 0.0
    if scheme is Scheme.BSPADE:
        return max(0.0, 1.0 - stats.chi ** 2)
    return stats.lambda_minus


class _IntensitySampler:
    """Draws photon positions from |psi|^2, shifted to the source position(s).

    Sampled PSFs: a grid cell is chosen with probability equal to the mass
    of the bilinearly interpolated node intensities, then the position
    inside the cell is drawn exactly from that bilinear density.
    """

    def __init__(self, psf: PointSpreadFunction):
        self.psf = psf
        if psf.kind is PsfKind.SAMPLED:
            dens = psf.samples ** 2
            corners = np.stack([dens[:-1, :-1], dens[1:, :-1], dens[:-1, 1:], dens[1:, 1:]], axis=-1)
            mass = corners.sum(axis=-1).ravel()
            self._cdf = np.cumsum(mass) / mass.sum()
            self._corners = corners.reshape(-1, 4)
            self._ny_cells = psf.y.size - 1

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.psf.kind is PsfKind.GAUSSIAN_UNIT_SIGMA:
            return rng.standard_normal((n, 2))
        u = rng.random((n, 4))
        cell = np.minimum(np.searchsorted(self._cdf, u[:, 0], side="right"), self._cdf.size - 1)
        c = self._corners[cell]
        wcum = np.cumsum(c, axis=1) / c.sum(axis=1, keepdims=True)
        corner = (u[:, 1:2] > wcum[:, :3]).sum(axis=1)
        # corner index bit 0: high x node, bit 1: high y node
        hi_x = (corner & 1).astype(bool)
        hi_y = (corner & 2).astype(bool)
        tx = np.where(hi_x, np.sqrt(u[:, 2]), 1.0 - np.sqrt(1.0 - u[:, 2]))
        ty = np.where(hi_y, np.sqrt(u[:, 3]), 1.0 - np.sqrt(1.0 - u[:, 3]))
        i, j = np.divmod(cell, self._ny_cells)
        x = self.psf.x[0] + (i + tx) * self.psf.dx
        y = self.psf.y[0] + (j + ty) * self.psf.dy
        return np.column_stack([x, y])


def _arrival_positions(sampler: _IntensitySampler, rng, truth: Hypothesis, d: float, n: int):
    pos = sampler.sample(rng, n)
    if truth is Hypothesis.H2 and n:
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        pos[:, 0] += sign * d / 2
    return pos


def _direct_log_ratio(psf: PointSpreadFunction, d: float, pos: np.ndarray) -> np.ndarray:
    """Per-photon log Lambda_2 / Lambda_1 at the recorded positions."""
    if psf.kind is PsfKind.GAUSSIAN_UNIT_SIGMA:
        return logcosh(pos[:, 0] * d / 2) - d * d / 8
    l1 = direct_image_density(psf, Hypothesis.H1, d, pos[:, 0], pos[:, 1])
    l2 = direct_image_density(psf, Hypothesis.H2, d, pos[:, 0], pos[:, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(l2) - np.log(l1)
    return np.where((l1 == 0) & (l2 == 0), 0.0, out)


def _log_prior_ratio(p1: float, p2: float) -> float:
    if p2 == 0:
        return math.inf
    if p1 == 0:
        return -math.inf
    return math.log(p1 / p2)


def _check_rule(scheme: Scheme, rule: DecisionRule) -> None:
    if scheme is Scheme.QUANTUM_LIMIT:
        raise DomainError("the Helstrom measurement is not simulated")
    if scheme is Scheme.DIRECT_IMAGING and rule is DecisionRule.SIMPLIFIED:
        raise DomainError("direct imaging has no simplified rule; use the likelihood-ratio test")


def _decide_binary(clicks, L, q_h2: float, rule: DecisionRule, threshold: float):
    """Decisions (True = H2) for click counts out of L photons."""
    if rule is DecisionRule.SIMPLIFIED:
        return clicks > 0
    # H1 never clicks, so any click gives an infinite likelihood ratio
    if q_h2 >= 1.0:
        no_click = np.where(L > 0, -np.inf, 0.0)
    else:
        no_click = L * math.log1p(-q_h2)
    return (clicks > 0) | (no_click > threshold)


def simulate_trial(scenario: Scenario, stats: OverlapStats | None, psf: PointSpreadFunction | None,
                   scheme: Scheme, truth: Hypothesis, rng: np.random.Generator,
                   rule: DecisionRule | None = None, L: int | None = None) -> TrialOutcome:
    """Simulate one observation mode by mode (or photon by photon when ``L`` is given)."""
    scheme, truth = Scheme(scheme), Hypothesis(truth)
    rule = DecisionRule(rule or (DecisionRule.LIKELIHOOD_RATIO if scheme is Scheme.DIRECT_IMAGING
                                 else DecisionRule.SIMPLIFIED))
    _check_rule(scheme, rule)
    psf = ensure_valid(psf or PointSpreadFunction.gaussian())
    stats = stats or overlap_stats(psf, scenario.d)
    if L is None:
        n_photons = int(np.count_nonzero(rng.random(scenario.M) < scenario.epsilon))
    else:
        n_photons = int(L)
    threshold = _log_prior_ratio(scenario.p1, scenario.p2)

    if scheme is Scheme.DIRECT_IMAGING:
        pos = _arrival_positions(_IntensitySampler(psf), rng, truth, scenario.d, n_photons)
        llr = float(np.sum(_direct_log_ratio(psf, scenario.d, pos)))
        decision = Hypothesis.H2 if llr > threshold else Hypothesis.H1
        return TrialOutcome(n_photons, pos, decision, truth)

    q = _click_probability(stats, scheme, truth)
    clicks = int(np.count_nonzero(rng.random(n_photons) < q))
    h2 = _decide_binary(clicks, n_photons, _click_probability(stats, scheme, Hypothesis.H2),
                        rule, threshold)
    return TrialOutcome(n_photons, clicks, Hypothesis.H2 if h2 else Hypothesis.H1, truth)


def _block_errors(scenario: Scenario, stats: OverlapStats, psf: PointSpreadFunction,
                  sampler: _IntensitySampler | None, scheme: Scheme, rule: DecisionRule,
                  conditioning: Conditioning, truth: Hypothesis, n: int, rng) -> int:
    if isinstance(conditioning, ConditionalOnL):
        L = np.full(n, conditioning.L, dtype=np.int64)
    else:
        # the number of occupied modes among M independent ones
        L = rng.binomial(conditioning.M, conditioning.epsilon, size=n)
    threshold = _log_prior_ratio(scenario.p1, scenario.p2)

    if scheme is Scheme.DIRECT_IMAGING:
        total = int(L.sum())
        pos = _arrival_positions(sampler, rng, truth, scenario.d, total)
        llr = _direct_log_ratio(psf, scenario.d, pos)
        owner = np.repeat(np.arange(n), L)
        per_trial = np.bincount(owner, weights=llr, minlength=n)
        say_h2 = per_trial > threshold
    else:
        q = _click_probability(stats, scheme, truth)
        clicks = rng.binomial(L, q)
        say_h2 = _decide_binary(clicks, L, _click_probability(stats, scheme, Hypothesis.H2),
                                rule, threshold)
    wrong = say_h2 if truth is Hypothesis.H1 else ~say_h2
    return int(np.count_nonzero(wrong))


def _estimate(scenario: Scenario, stats: OverlapStats | None, psf: PointSpreadFunction | None,
              scheme: Scheme, rule: DecisionRule, conditioning: Conditioning, trials: int,
              seed: int, workers: int) -> MonteCarloSummary:
    scheme, rule = Scheme(scheme), DecisionRule(rule)
    _check_rule(scheme, rule)
    if isinstance(trials, bool) or int(trials) != trials or trials < 1:
        raise DomainError(f"trials must be a positive integer, got {trials!r}")
    trials = int(trials)
    psf = ensure_valid(psf or PointSpreadFunction.gaussian())
    stats = stats or overlap_stats(psf, scenario.d)
    sampler = _IntensitySampler(psf) if scheme is Scheme.DIRECT_IMAGING else None

    jobs = []
    for truth in (Hypothesis.H1, Hypothesis.H2):
        for b, start in enumerate(range(0, trials, BLOCK_SIZE)):
            jobs.append((truth, b, min(BLOCK_SIZE, trials - start)))

    def run(job):
        truth, b, n = job
        return truth, _block_errors(scenario, stats, psf, sampler, scheme, rule, conditioning,
                                    truth, n, trial_generator(seed, truth, b))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    false_alarms = sum(e for t, e in results if t is Hypothesis.H1)
    misses = sum(e for t, e in results if t is Hypothesis.H2)
    return summarize(scheme, rule, conditioning, scenario.p1, scenario.p2, trials,
                     false_alarms, misses, seed)


def summarize(scheme: Scheme, rule: DecisionRule, conditioning: Conditioning, p1: float,
              p2: float, trials: int, false_alarms: int, misses: int, seed: int) -> MonteCarloSummary:
    """Rates, Wilson intervals and standard errors from stratified error counts.

    The interval for the average error combines the per-hypothesis
    intervals with the prior weights (p1 * bound_alpha + p2 * bound_beta).
    """
    alpha, beta = false_alarms / trials, misses / trials
    ci_a, ci_b = wilson_interval(false_alarms, trials), wilson_interval(misses, trials)
    se_a = math.sqrt(alpha * (1 - alpha) / trials)
    se_b = math.sqrt(beta * (1 - beta) / trials)
    ci = {
        "alpha": ci_a,
        "beta": ci_b,
        "p_error": (p1 * ci_a[0] + p2 * ci_b[0], p1 * ci_a[1] + p2 * ci_b[1]),
    }
    se = {"alpha": se_a, "beta": se_b, "p_error": math.hypot(p1 * se_a, p2 * se_b)}
    return MonteCarloSummary(scheme, rule, conditioning, p1, p2, trials, false_alarms, misses,
                             alpha, beta, p1 * alpha + p2 * beta, ci, se, int(seed))


def estimate_error(scenario: Scenario, stats: OverlapStats | None, psf: PointSpreadFunction | None,
                   scheme: Scheme, rule: DecisionRule, trials: int, seed: int,
                   workers: int = 1) -> MonteCarloSummary:
    """Empirical error rates over M temporal modes with mean photon number epsilon each."""
    return _estimate(scenario, stats, psf, scheme, rule, scenario.conditioning, trials, seed, workers)


def estimate_error_conditional(scenario: Scenario, stats: OverlapStats | None,
                               psf: PointSpreadFunction | None, scheme: Scheme,
                               rule: DecisionRule, L: int, trials: int, seed: int,
                               workers: int = 1) -> MonteCarloSummary:
    """Empirical error rates given exactly ``L`` detected photons per trial."""
    return _estimate(scenario, stats, psf, scheme, rule, ConditionalOnL(L), trials, seed, workers)


SUMMARY_FIELDS = [
    "scheme", "rule", "conditioning", "L", "M", "epsilon", "p1", "p2", "trials", "seed", "rng_id",
    "false_alarms", "misses", "empirical_alpha", "alpha_ci_low", "alpha_ci_high",
    "empirical_beta", "beta_ci_low", "beta_ci_high",
    "empirical_p_error", "p_error_ci_low", "p_error_ci_high", "p_error_se",
]


def summary_row(s: MonteCarloSummary) -> dict:
    """Flatten a summary into a CSV-ready mapping keyed by ``SUMMARY_FIELDS``."""
    cond = s.conditioning
    conditional = isinstance(cond, ConditionalOnL)
    return {
        "scheme": s.scheme.value,
        "rule": s.rule.value,
        "conditioning": "L" if conditional else "M",
        "L": cond.L if conditional else "",
        "M": "" if conditional else cond.M,
        "epsilon": "" if conditional else cond.epsilon,
        "p1": s.p1,
        "p2": s.p2,
        "trials": s.trials,
        "seed": s.seed,
        "rng_id": s.rng_id,
        "false_alarms": s.false_alarms,
        "misses": s.misses,
        "empirical_alpha": s.empirical_alpha,
        "alpha_ci_low": s.wilson_ci_95["alpha"][0],
        "alpha_ci_high": s.wilson_ci_95["alpha"][1],
        "empirical_beta": s.empirical_beta,
        "beta_ci_low": s.wilson_ci_95["beta"][0],
        "beta_ci_high": s.wilson_ci_95["beta"][1],
        "empirical_p_error": s.empirical_p_error,
        "p_error_ci_low": s.wilson_ci_95["p_error"][0],
        "p_error_ci_high": s.wilson_ci_95["p_error"][1],
        "p_error_se": s.standard_error["p_error"],
    }
