"""Adaptive Gauss-Legendre panel quadrature and Gauss-Hermite expectations.

The integrands here are vectorized callables.  A 1-D integrand receives an
ndarray of abscissae; a 2-D integrand receives two broadcastable ndarrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureFailure


@dataclass(frozen=True)
class QuadratureConfig:
    """Scheme identifier, absolute tolerance and truncation half-width.

    ``half_width`` is the minimum half-width of the truncation box in units of
    sigma; callers widen it to cover shifted copies of the PSF.
    """

    scheme: str = "gauss-legendre-adaptive"
    tol: float = 1e-10
    half_width: float = 8.0
    order: int = 12
    max_panels: int = 200_000


DEFAULT_QUADRATURE = QuadratureConfig()


@lru_cache(maxsize=None)
def legendre_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def normal_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights with sum(w * g(x)) ~= E[g(X)], X ~ N(0, 1)."""
    x, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def normal_expectation(g, order: int = 64) -> float:
    x, w = normal_rule(order)
    return float(np.dot(w, g(x)))


def _panel_sums_1d(f, lo, hi, order):
    x, w = legendre_rule(order)
    half = 0.5 * (hi - lo)
    pts = (0.5 * (hi + lo))[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(pts), dtype=float)
    return half * (vals @ w)


def integrate_1d(f, a: float, b: float, tol: float = 1e-10, order: int = 12,
                 initial_panels: int = 8, max_panels: int = 100_000) -> float:
    """Integrate ``f`` over ``[a, b]`` by adaptive bisection of Gauss-Legendre panels.

    A panel is accepted once the difference between its single-panel estimate
    and the sum over its two halves is below its share of ``tol`` (share
    proportional to panel width).
    """
    if b < a:
        return -integrate_1d(f, b, a, tol, order, initial_panels, max_panels)
    if b == a:
        return 0.0
    width = b - a
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    accepted: list[float] = []
    used = 0
    while lo.size:
        used += lo.size
        if used > max_panels:
            raise QuadratureFailure(
                f"1-D quadrature exceeded {max_panels} panels before reaching tol={tol:g}")
        mid = 0.5 * (lo + hi)
        if np.any((mid <= lo) | (mid >= hi)):
            raise QuadratureFailure(f"panel width reached float resolution before tol={tol:g}")
        coarse = _panel_sums_1d(f, lo, hi, order)
        fine = _panel_sums_1d(f, lo, mid, order) + _panel_sums_1d(f, mid, hi, order)
        if not np.all(np.isfinite(fine)):
            raise QuadratureFailure("non-finite integrand value")
        ok = np.abs(fine - coarse) <= tol * (hi - lo) / width
        accepted.extend(fine[ok].tolist())
        bad = ~ok
        lo, hi = np.concatenate([lo[bad], mid[bad]]), np.concatenate([mid[bad], hi[bad]])
    return math.fsum(accepted)


def _panel_sums_2d(f, x0, x1, y0, y1, order):
    t, w = legendre_rule(order)
    hx = 0.5 * (x1 - x0)
    hy = 0.5 * (y1 - y0)
    xs = (0.5 * (x0 + x1))[:, None, None] + hx[:, None, None] * t[None, :, None]
    ys = (0.5 * (y0 + y1))[:, None, None] + hy[:, None, None] * t[None, None, :]
    vals = np.asarray(f(xs, ys), dtype=float)
    vals = np.broadcast_to(vals, (x0.size, order, order))
    return hx * hy * np.einsum("pij,i,j->p", vals, w, w)


def integrate_2d(f, x_range: tuple[float, float], y_range: tuple[float, float],
                 tol: float = 1e-10, order: int = 12, initial_panels: int = 4,
                 max_panels: int = 200_000) -> float:
    """Product-rule Gauss-Legendre integration over a rectangle with quadtree refinement."""
    ax, bx = x_range
    ay, by = y_range
    area = (bx - ax) * (by - ay)
    if area <= 0:
        return 0.0
    ex = np.linspace(ax, bx, initial_panels + 1)
    ey = np.linspace(ay, by, initial_panels + 1)
    gx0, gy0 = np.meshgrid(ex[:-1], ey[:-1], indexing="ij")
    gx1, gy1 = np.meshgrid(ex[1:], ey[1:], indexing="ij")
    x0, x1, y0, y1 = gx0.ravel(), gx1.ravel(), gy0.ravel(), gy1.ravel()
    accepted: list[float] = []
    used = 0
    while x0.size:
        used += x0.size
        if used > max_panels:
            raise QuadratureFailure(
                f"2-D quadrature exceeded {max_panels} panels before reaching tol={tol:g}")
        xm = 0.5 * (x0 + x1)
        ym = 0.5 * (y0 + y1)
        if np.any((xm <= x0) | (xm >= x1) | (ym <= y0) | (ym >= y1)):
            raise QuadratureFailure(f"panel width reached float resolution before tol={tol:g}")
        coarse = _panel_sums_2d(f, x0, x1, y0, y1, order)
        # children ordered (left-bottom, left-top, right-bottom, right-top)
        cx0 = np.concatenate([x0, x0, xm, xm])
        cx1 = np.concatenate([xm, xm, x1, x1])
        cy0 = np.concatenate([y0, ym, y0, ym])
        cy1 = np.concatenate([ym, y1, ym, y1])
        children = _panel_sums_2d(f, cx0, cx1, cy0, cy1, order).reshape(4, -1)
        fine = children.sum(axis=0)
        if not np.all(np.isfinite(fine)):
            raise QuadratureFailure("non-finite integrand value")
        ok = np.abs(fine - coarse) <= tol * (x1 - x0) * (y1 - y0) / area
        accepted.extend(fine[ok].tolist())
        bad = np.tile(~ok, 4)
        x0, x1, y0, y1 = cx0[bad], cx1[bad], cy0[bad], cy1[bad]
    return math.fsum(accepted)
