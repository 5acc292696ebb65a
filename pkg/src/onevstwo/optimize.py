"""Bounded scalar minimization: golden-section bracketing plus parabolic refinement."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import OptimizationFailure

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ScalarMinimum:
    x: float
    fx: float
    iterations: int
    achieved_tol: float


def golden_parabolic_minimize(f, lo: float = 0.0, hi: float = 1.0, bracket_tol: float = 1e-6,
                              tol: float = 1e-10, max_iter: int = 500) -> ScalarMinimum:
    """Minimize a unimodal ``f`` on ``[lo, hi]``.

    Golden-section search shrinks the bracket to ``bracket_tol``; successive
    parabolic interpolation through the three best points then refines the
    abscissa until a step is smaller than ``tol``.  The endpoints are always
    evaluated and win if they are lower than the interior estimate.
    """
    f_lo, f_hi = f(lo), f(hi)
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    it = 0
    while b - a > bracket_tol:
        it += 1
        if it > max_iter:
            raise OptimizationFailure("golden-section search did not converge")
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
        if math.isnan(f1) or math.isnan(f2):
            raise OptimizationFailure("objective returned NaN")

    pts = sorted([(f1, x1), (f2, x2), (f(a), a), (f(b), b)])[:3]
    achieved = b - a
    for _ in range(50):
        it += 1
        (fa, xa), (fb, xb), (fc, xc) = pts
        num = (xb - xa) ** 2 * (fb - fc) - (xb - xc) ** 2 * (fb - fa)
        den = (xb - xa) * (fb - fc) - (xb - xc) * (fb - fa)
        if den == 0.0:
            break
        x_new = xb - 0.5 * num / den
        if not a <= x_new <= b:
            break
        step = abs(x_new - xa)
        f_new = f(x_new)
        if f_new < fa:
            pts = sorted(pts + [(f_new, x_new)])[:3]
            achieved = step
        else:
            break
        if step < tol:
            break
    fx, x = pts[0]

    if f_lo <= fx:
        fx, x = f_lo, lo
    if f_hi < fx:
        fx, x = f_hi, hi
    return ScalarMinimum(x, fx, it, achieved)
