"""Command-line front end: CSV sweeps of exponents and error probabilities.

Subcommands::

    exponents      d, xi_quantum, xi_bspade, xi_sliver, xi_direct
    conditional    d_squared, p_min, p_bspade, p_sliver, p_direct_lower, p_direct_upper
    photons        L, p_min, p_bspade, p_sliver, p_direct_lower, p_direct_upper
    unconditional  d, M, p_min_uncond, p_bspade_uncond, p_sliver_uncond
    simulate       Monte Carlo summary next to the analytic values, with in_ci

Every option may also come from a key=value file passed with ``--config``;
options given on the command line win.  Exit status: 0 success, 1 numerical
failure, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from contextlib import contextmanager
from pathlib import Path

from .common import ConditionalOnL, Scheme, UnconditionalOnM
from .errors import DomainError, OptimizationFailure, QuadratureFailure
from .measurements import (bhattacharyya, bspade_error, bspade_exponent,
                           direct_imaging_bounds, direct_imaging_bounds_unconditional,
                           direct_imaging_exponent, sliver_error, sliver_exponent)
from .montecarlo import (SUMMARY_FIELDS, DecisionRule, estimate_error,
                         estimate_error_conditional, summary_row)
from .psf import PointSpreadFunction, load_sampled_psf, overlap_stats, read_key_values
from .quantum_limits import (Scenario, min_error_conditional, min_error_unconditional,
                             quantum_chernoff)

EXIT_OK, EXIT_NUMERICAL, EXIT_INVALID = 0, 1, 2


class ConfigError(ValueError):
    pass


def fmt(value) -> str:
    """Render one CSV cell: floats to 12 significant digits, booleans lowercase."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if value == 0.0:
            return "0"
        return format(value, ".12g")
    return str(value)


def grid(lo: float, hi: float, step: float) -> list[float]:
    if not step > 0:
        raise ConfigError(f"step must be positive, got {step}")
    if hi < lo:
        raise ConfigError(f"empty range [{lo}, {hi}]")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(n)]


def int_grid(lo: int, hi: int, step: int = 1) -> list[int]:
    if step <= 0 or hi < lo or lo < 0:
        raise ConfigError(f"invalid integer range {lo}..{hi} step {step}")
    return list(range(lo, hi + 1, step))


def parse_psf(spec: str) -> PointSpreadFunction:
    if spec == "gaussian":
        return PointSpreadFunction.gaussian()
    if spec.startswith("file:"):
        return load_sampled_psf(spec[len("file:"):])
    raise ConfigError(f"--psf must be 'gaussian' or 'file:<path>', got {spec!r}")


def _priors(args) -> tuple[float, float]:
    if not 0.0 <= args.p1 <= 1.0:
        raise ConfigError(f"--p1 must lie in [0, 1], got {args.p1}")
    return args.p1, 1.0 - args.p1


# --- sweeps ---------------------------------------------------------------

def cmd_exponents(args):
    psf = parse_psf(args.psf)
    yield ["d", "xi_quantum", "xi_bspade", "xi_sliver", "xi_direct"]
    for d in grid(args.d_min, args.d_max, args.d_step):
        st = overlap_stats(psf, d)
        yield [d, quantum_chernoff(st).exponent, bspade_exponent(st).exponent,
               sliver_exponent(st).exponent, direct_imaging_exponent(psf, d).exponent]


CONDITIONAL_COLUMNS = ["p_min", "p_bspade", "p_sliver", "p_direct_lower", "p_direct_upper"]


def _conditional_row(psf, d, L, p1, p2, direct_cache):
    st = overlap_stats(psf, d)
    cond = ConditionalOnL(L)
    row = [min_error_conditional(st, p1, p2, L).p_error,
           bspade_error(st, p1, p2, cond).p_error,
           sliver_error(st, p1, p2, cond).p_error]
    if p1 != p2:
        return row + [math.nan, math.nan]
    if d not in direct_cache:
        direct_cache[d] = (bhattacharyya(psf, d), direct_imaging_exponent(psf, d).exponent)
    F, xi = direct_cache[d]
    b = direct_imaging_bounds(F, xi, L, p1, p2)
    return row + [b.lower, b.upper]


def cmd_conditional(args):
    psf = parse_psf(args.psf)
    p1, p2 = _priors(args)
    cache: dict = {}
    yield ["d_squared"] + CONDITIONAL_COLUMNS
    for d2 in grid(args.d2_min, args.d2_max, args.d2_step):
        if d2 < 0:
            raise ConfigError("d_squared must be >= 0")
        yield [d2] + _conditional_row(psf, math.sqrt(d2), args.L, p1, p2, cache)


def cmd_photons(args):
    psf = parse_psf(args.psf)
    p1, p2 = _priors(args)
    cache: dict = {}
    yield ["L"] + CONDITIONAL_COLUMNS
    for L in int_grid(args.L_min, args.L_max, args.L_step):
        yield [L] + _conditional_row(psf, args.d, L, p1, p2, cache)


def _m_list(text) -> list[int]:
    try:
        ms = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--M must be a comma-separated list of integers, got {text!r}") from None
    if not ms or any(m < 1 for m in ms):
        raise ConfigError(f"--M values must be positive, got {text!r}")
    return ms


def cmd_unconditional(args):
    psf = parse_psf(args.psf)
    p1, p2 = _priors(args)
    yield ["d", "M", "p_min_uncond", "p_bspade_uncond", "p_sliver_uncond"]
    for M in _m_list(args.M):
        cond = UnconditionalOnM(M, args.epsilon)
        for d in grid(args.d_min, args.d_max, args.d_step):
            st = overlap_stats(psf, d)
            sc = Scenario(d, p1, p2, args.epsilon, M)
            yield [d, M, min_error_unconditional(st, sc).p_error,
                   bspade_error(st, p1, p2, cond).p_error, sliver_error(st, p1, p2, cond).p_error]


def cmd_simulate(args):
    psf = parse_psf(args.psf)
    p1, p2 = _priors(args)
    scheme, rule = Scheme(args.scheme), DecisionRule(args.rule)
    M = _m_list(args.M)[0]
    sc = Scenario(args.d, p1, p2, args.epsilon, M)
    st = overlap_stats(psf, args.d)
    if args.L is not None:
        cond = ConditionalOnL(args.L)
        summary = estimate_error_conditional(sc, st, psf, scheme, rule, args.L, args.trials,
                                             args.seed, args.workers)
    else:
        cond = sc.conditioning
        summary = estimate_error(sc, st, psf, scheme, rule, args.trials, args.seed, args.workers)

    nan = math.nan
    analytic = dict(analytic_alpha=nan, analytic_beta=nan, analytic_p_error=nan,
                    analytic_lower=nan, analytic_upper=nan)
    in_ci = ""
    ci = summary.wilson_ci_95
    if scheme in (Scheme.BSPADE, Scheme.SLIVER):
        # the likelihood-ratio rule coincides with the simplified one when p1 >= p2
        if rule is DecisionRule.SIMPLIFIED or p1 >= p2:
            rep = (bspade_error if scheme is Scheme.BSPADE else sliver_error)(st, p1, p2, cond)
            analytic.update(analytic_alpha=rep.alpha, analytic_beta=rep.beta,
                            analytic_p_error=rep.p_error)
            in_ci = summary.contains("alpha", rep.alpha) and summary.contains("beta", rep.beta)
    elif p1 == p2:
        F, xi = bhattacharyya(psf, args.d), direct_imaging_exponent(psf, args.d).exponent
        if isinstance(cond, ConditionalOnL):
            b = direct_imaging_bounds(F, xi, cond.L)
        else:
            b = direct_imaging_bounds_unconditional(F, xi, cond.M, cond.epsilon)
        analytic.update(analytic_lower=b.lower, analytic_upper=b.upper)
        in_ci = ci["p_error"][0] <= b.upper and ci["p_error"][1] >= b.lower

    row = summary_row(summary)
    row["d"] = args.d
    row.update(analytic)
    row["in_ci"] = in_ci
    fields = ["scheme", "d"] + SUMMARY_FIELDS[1:] + list(analytic) + ["in_ci"]
    yield fields
    yield [row[f] for f in fields]


# --- argument handling ----------------------------------------------------

def _common(p: argparse.ArgumentParser, *, d_range=False, d=False):
    p.add_argument("--p1", type=float, default=0.5, help="prior of H1; p2 = 1 - p1")
    p.add_argument("--psf", default="gaussian", help="'gaussian' or 'file:<csv path>'")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--config", help="key=value file supplying default options")
    if d_range:
        p.add_argument("--d-min", type=float, default=0.0)
        p.add_argument("--d-max", type=float, default=6.0)
        p.add_argument("--d-step", type=float, default=0.1)
    if d:
        p.add_argument("--d", type=float, default=2.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onevstwo", description="Error probabilities and exponents for one-vs-two source detection.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", help="asymptotic error exponents versus d")
    _common(p, d_range=True)
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("conditional", help="error probabilities at fixed L versus d^2")
    _common(p)
    p.add_argument("--L", type=int, default=5)
    p.add_argument("--d2-min", type=float, default=0.0)
    p.add_argument("--d2-max", type=float, default=16.0)
    p.add_argument("--d2-step", type=float, default=0.25)
    p.set_defaults(func=cmd_conditional)

    p = sub.add_parser("photons", help="error probabilities at fixed d versus L")
    _common(p, d=True)
    p.add_argument("--L-min", type=int, default=0)
    p.add_argument("--L-max", type=int, default=30)
    p.add_argument("--L-step", type=int, default=1)
    p.set_defaults(func=cmd_photons)

    p = sub.add_parser("unconditional", help="error probabilities over M temporal modes versus d")
    _common(p, d_range=True)
    p.add_argument("--M", default="100,500,1000", help="comma-separated temporal-mode counts")
    p.add_argument("--epsilon", type=float, default=0.01)
    p.set_defaults(func=cmd_unconditional, d_max=4.0)

    p = sub.add_parser("simulate", help="Monte Carlo error rates with analytic comparison")
    _common(p, d=True)
    p.add_argument("--scheme", choices=[s.value for s in Scheme if s is not Scheme.QUANTUM_LIMIT],
                   default="bspade")
    p.add_argument("--rule", choices=[r.value for r in DecisionRule], default=None)
    p.add_argument("--L", type=int, default=None, help="condition on L photons (else use M, epsilon)")
    p.add_argument("--M", default="1000")
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
    dests = {a.dest for a in sub._actions}  # noqa: SLF001
    values = {}
    for key, val in read_key_values(args.config).items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in dests or dest in ("config", "help"):
            raise ConfigError(f"{args.config}: unknown option {key!r} for {args.command}")
        values[dest] = val
    sub.set_defaults(**values)
    return parser.parse_args(argv)


@contextmanager
def _output(path):
    if path:
        with Path(path).open("w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        if args.command == "simulate" and args.rule is None:
            args.rule = "lr" if args.scheme == "direct" else "simplified"
        rows = list(args.func(args))
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    except (QuadratureFailure, OptimizationFailure) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    with _output(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
