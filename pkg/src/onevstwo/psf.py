"""Point-spread functions, overlap integrals and direct-imaging densities.

Lengths are measured in units of the Gaussian width sigma throughout.  A
PSF is either the analytic unit-sigma Gaussian

    psi(x, y) = f(x) f(y),   f(x) = (2 pi)^(-1/4) exp(-x^2 / 4)

or a real amplitude sampled on a rectangular grid.  Sampled amplitudes are
bilinearly interpolated off the grid nodes and vanish outside the grid.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .common import Hypothesis
from .errors import AsymmetricPsf, ComplexAmplitude, DomainError, NotNormalized
from .quadrature import DEFAULT_QUADRATURE, QuadratureConfig, integrate_2d

SYMMETRY_TOL = 1e-9
SAMPLED_NORM_TOL = 1e-6
# margin (in sigma) a sampled grid must leave around both sources before
# out-of-grid points may be treated as zero density
DENSITY_MARGIN = 6.0

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class PsfKind(enum.Enum):
    GAUSSIAN_UNIT_SIGMA = "gaussian"
    SAMPLED = "sampled"


@dataclass(frozen=True, eq=False)
class PointSpreadFunction:
    kind: PsfKind
    samples: np.ndarray | None = None  # psi[ix, iy]
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    quadrature: QuadratureConfig = DEFAULT_QUADRATURE
    validated: bool = field(default=False, compare=False)

    @classmethod
    def gaussian(cls, quadrature: QuadratureConfig = DEFAULT_QUADRATURE) -> "PointSpreadFunction":
        return validate(cls(PsfKind.GAUSSIAN_UNIT_SIGMA, quadrature=quadrature))

    @classmethod
    def from_samples(cls, samples, x, y,
                     quadrature: QuadratureConfig = DEFAULT_QUADRATURE) -> "PointSpreadFunction":
        """Build and validate a sampled PSF from ``samples[ix, iy]`` on nodes ``x`` and ``y``.

        Node coordinates must be uniformly spaced and increasing.
        """
        samples = np.asarray(samples)
        if np.iscomplexobj(samples):
            if np.any(samples.imag != 0):
                raise ComplexAmplitude("sampled PSF carries nonzero imaginary parts")
            samples = samples.real
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if samples.shape != (x.size, y.size):
            raise DomainError(f"samples shape {samples.shape} does not match grid ({x.size}, {y.size})")
        for name, nodes in (("x", x), ("y", y)):
            if nodes.size < 2:
                raise DomainError(f"{name} grid needs at least two nodes")
            steps = np.diff(nodes)
            if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps.mean():
                raise DomainError(f"{name} grid must be uniform and increasing")
        samples = np.array(samples, dtype=float)
        for arr in (samples, x, y):
            arr.setflags(write=False)
        return validate(cls(PsfKind.SAMPLED, samples, x, y, quadrature))

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])

    def amplitude(self, x, y):
        """Evaluate psi(x, y) (vectorized; zero outside a sampled grid)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind is PsfKind.GAUSSIAN_UNIT_SIGMA:
            return _INV_SQRT_2PI * np.exp(-(x * x + y * y) / 4.0)
        return _bilinear(self, x, y)

    def covers(self, x_lo: float, x_hi: float, y_lo: float, y_hi: float) -> bool:
        if self.kind is PsfKind.GAUSSIAN_UNIT_SIGMA:
            return True
        return (self.x[0] <= x_lo and self.x[-1] >= x_hi
                and self.y[0] <= y_lo and self.y[-1] >= y_hi)


@dataclass(frozen=True)
class OverlapStats:
    """Overlap-derived quantities for one (PSF, separation) pair."""

    delta_d: float
    lambda_plus: float
    lambda_minus: float
    chi: float
    d: float

    @classmethod
    def from_overlaps(cls, delta_d: float, chi: float, d: float = math.nan,
                      one_minus_delta: float | None = None) -> "OverlapStats":
        """Assemble stats from delta(d) and chi = delta(d/2).

        ``one_minus_delta`` may be supplied when 1 - delta(d) is known more
        accurately than the subtraction would give (small separations).
        """
        if not -1.0 < delta_d <= 1.0:
            raise DomainError(f"delta(d) must lie in (-1, 1], got {delta_d!r}")
        if not -1.0 < chi <= 1.0:
            raise DomainError(f"chi must lie in (-1, 1], got {chi!r}")
        if one_minus_delta is None:
            one_minus_delta = 1.0 - delta_d
        lambda_minus = 0.5 * one_minus_delta
        return cls(delta_d, 1.0 - lambda_minus, lambda_minus, chi, d)


def validate(psf: PointSpreadFunction) -> PointSpreadFunction:
    """Check normalization, mirror symmetry and realness; return a validated copy."""
    if psf.validated:
        return psf
    if psf.kind is PsfKind.GAUSSIAN_UNIT_SIGMA:
        return replace(psf, validated=True)

    s = psf.samples
    if s is None or psf.x is None or psf.y is None:
        raise DomainError("sampled PSF needs samples and grid nodes")
    if np.iscomplexobj(s):
        if np.any(np.imag(s) != 0):
            raise ComplexAmplitude("sampled PSF carries nonzero imaginary parts")
        s = np.real(s)
    if not np.all(np.isfinite(s)):
        raise DomainError("sampled PSF contains non-finite values")

    x = psf.x
    if np.max(np.abs(x + x[::-1])) > 1e-9 * max(1.0, psf.dx):
        raise AsymmetricPsf("sampled grid is not mirror-symmetric about x = 0")
    asym = np.max(np.abs(s - s[::-1, :]))
    if asym > SYMMETRY_TOL:
        raise AsymmetricPsf(f"psi(x, y) != psi(-x, y): max deviation {asym:.3g}")

    norm = float(np.sum(_trapezoid_weights(psf) * s * s))
    if abs(norm - 1.0) > SAMPLED_NORM_TOL:
        raise NotNormalized(f"integral of |psi|^2 is {norm:.9f}, expected 1")
    return replace(psf, samples=s, validated=True)


def ensure_valid(psf: PointSpreadFunction) -> PointSpreadFunction:
    return psf if psf.validated else validate(psf)


def _trapezoid_weights(psf: PointSpreadFunction) -> np.ndarray:
    wx = np.full(psf.x.size, psf.dx)
    wx[[0, -1]] *= 0.5
    wy = np.full(psf.y.size, psf.dy)
    wy[[0, -1]] *= 0.5
    return wx[:, None] * wy[None, :]


def _bilinear(psf: PointSpreadFunction, x, y):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    nx, ny = psf.x.size, psf.y.size
    fx = (x - psf.x[0]) / psf.dx
    fy = (y - psf.y[0]) / psf.dy
    inside = (fx >= -1e-12) & (fx <= nx - 1 + 1e-12) & (fy >= -1e-12) & (fy <= ny - 1 + 1e-12)
    i = np.clip(np.floor(fx).astype(np.int64), 0, nx - 2)
    j = np.clip(np.floor(fy).astype(np.int64), 0, ny - 2)
    tx = np.clip(fx - i, 0.0, 1.0)
    ty = np.clip(fy - j, 0.0, 1.0)
    s = psf.samples
    val = ((1 - tx) * (1 - ty) * s[i, j] + tx * (1 - ty) * s[i + 1, j]
           + (1 - tx) * ty * s[i, j + 1] + tx * ty * s[i + 1, j + 1])
    return np.where(inside, val, 0.0)


def _check_separation(d: float) -> float:
    d = float(d)
    if not math.isfinite(d) or d < 0:
        raise DomainError(f"separation d must be finite and >= 0, got {d!r}")
    return d


def overlap(psf: PointSpreadFunction, d: float, method: str = "auto") -> float:
    """Overlap delta(d) = integral of psi(x, y) psi(x - d, y).

    ``method`` selects the evaluation path: ``"closed_form"`` (Gaussian only),
    ``"quadrature"``, or ``"auto"`` (closed form for the Gaussian, quadrature
    otherwise).  Sampled PSFs are integrated with the composite trapezoid
    rule over the grid nodes; the Gaussian quadrature path uses adaptive
    Gauss-Legendre panels on the box of half-width max(8, d/2 + 8).
    """
    psf = ensure_valid(psf)
    d = _check_separation(d)
    gaussian = psf.kind is PsfKind.GAUSSIAN_UNIT_SIGMA
    if method not in ("auto", "closed_form", "quadrature"):
        raise DomainError(f"unknown overlap method {method!r}")
    if method == "closed_form" and not gaussian:
        raise DomainError("closed-form overlap exists only for the Gaussian PSF")

    if gaussian and method != "quadrature":
        return math.exp(-d * d / 8.0)
    if gaussian:
        cfg = psf.quadrature
        w = max(cfg.half_width, d / 2 + cfg.half_width)
        val = integrate_2d(lambda x, y: psf.amplitude(x, y) * psf.amplitude(x - d, y),
                           (-w, w), (-w, w), tol=cfg.tol, order=cfg.order,
                           max_panels=cfg.max_panels)
    else:
        gx, gy = np.meshgrid(psf.x, psf.y, indexing="ij")
        shifted = _bilinear(psf, gx - d, gy)
        val = float(np.sum(_trapezoid_weights(psf) * psf.samples * shifted))
    return min(val, 1.0)


def overlap_stats(psf: PointSpreadFunction, d: float, method: str = "auto") -> OverlapStats:
    psf = ensure_valid(psf)
    d = _check_separation(d)
    if psf.kind is PsfKind.GAUSSIAN_UNIT_SIGMA and method != "quadrature":
        return OverlapStats.from_overlaps(math.exp(-d * d / 8.0), math.exp(-d * d / 32.0), d,
                                          one_minus_delta=-math.expm1(-d * d / 8.0))
    return OverlapStats.from_overlaps(overlap(psf, d, method), overlap(psf, d / 2, method), d)


def gaussian_stats(d: float) -> OverlapStats:
    """Shortcut for ``overlap_stats(PointSpreadFunction.gaussian(), d)``."""
    return overlap_stats(PointSpreadFunction.gaussian(), d)


def direct_image_density(psf: PointSpreadFunction, hypothesis: Hypothesis, d: float, x, y):
    """Photon-arrival density on the image plane under H1 or H2.

    H1 is ``|psi(x, y)|^2``; H2 is the equal mixture of the PSF intensity
    centred at ``+d/2`` and ``-d/2``.  For a sampled PSF, points outside the
    grid count as zero density only when the grid extends at least
    6 sigma beyond both source positions; otherwise they raise DomainError.
    """
    psf = ensure_valid(psf)
    d = _check_separation(d)
    hypothesis = Hypothesis(hypothesis)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if psf.kind is PsfKind.SAMPLED:
        outside = ((x < psf.x[0]) | (x > psf.x[-1]) | (y < psf.y[0]) | (y > psf.y[-1]))
        m = DENSITY_MARGIN
        if np.any(outside) and not psf.covers(-d / 2 - m, d / 2 + m, -m, m):
            raise DomainError("point outside sampled grid and grid lacks a 6-sigma margin")

    def intensity(u, v):
        a = psf.amplitude(u, v)
        return a * a

    if hypothesis is Hypothesis.H1:
        return intensity(x, y)
    return 0.5 * intensity(x - d / 2, y) + 0.5 * intensity(x + d / 2, y)


def sample_gaussian_psf(spacing: float = 0.05, half_extent: float = 8.0,
                        x_shift: float = 0.0) -> PointSpreadFunction:
    """Unvalidated sampled copy of the unit Gaussian on a square grid.

    ``x_shift`` displaces the Gaussian along x, which breaks the mirror symmetry.
    """
    n = int(round(2 * half_extent / spacing)) + 1
    nodes = np.linspace(-half_extent, half_extent, n)
    gx, gy = np.meshgrid(nodes, nodes, indexing="ij")
    g = PointSpreadFunction(PsfKind.GAUSSIAN_UNIT_SIGMA)
    values = g.amplitude(gx - x_shift, gy)
    return PointSpreadFunction(PsfKind.SAMPLED, values, nodes, nodes.copy())


def save_sampled_psf(psf: PointSpreadFunction, path: str | Path) -> Path:
    """Write ``x,y,psi`` rows plus a ``<path>.meta`` key=value sidecar; returns the sidecar path."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "psi"])
        for j, yv in enumerate(psf.y):
            for i, xv in enumerate(psf.x):
                w.writerow([repr(float(xv)), repr(float(yv)), repr(float(psf.samples[i, j]))])
    meta = path.with_name(path.name + ".meta")
    meta.write_text(
        f"dx={psf.dx!r}\ndy={psf.dy!r}\n"
        f"x_min={float(psf.x[0])!r}\nx_max={float(psf.x[-1])!r}\n"
        f"y_min={float(psf.y[0])!r}\ny_max={float(psf.y[-1])!r}\n")
    return meta


def read_key_values(path: str | Path) -> dict[str, str]:
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}: expected key=value, got {raw!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_sampled_psf(path: str | Path, meta_path: str | Path | None = None,
                     quadrature: QuadratureConfig = DEFAULT_QUADRATURE) -> PointSpreadFunction:
    """Load a sampled PSF from a ``x,y,psi`` CSV grid and its key=value sidecar.

    The sidecar defaults to ``<path>.meta`` and must provide ``dx``, ``dy``,
    ``x_min``, ``x_max``, ``y_min`` and ``y_max``.
    """
    path = Path(path)
    meta = read_key_values(meta_path or path.with_name(path.name + ".meta"))
    try:
        dx, dy = float(meta["dx"]), float(meta["dy"])
        x_min, x_max = float(meta["x_min"]), float(meta["x_max"])
        y_min, y_max = float(meta["y_min"]), float(meta["y_max"])
    except KeyError as exc:
        raise DomainError(f"PSF metadata is missing {exc.args[0]!r}") from None
    nx = int(round((x_max - x_min) / dx)) + 1
    ny = int(round((y_max - y_min) / dy)) + 1

    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["x", "y", "psi"]:
            raise DomainError(f"{path}: header must be x,y,psi, got {header}")
        rows = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    if rows.shape != (nx * ny, 3):
        raise DomainError(f"{path}: expected {nx * ny} grid rows, found {rows.shape[0]}")
    ix = np.rint((rows[:, 0] - x_min) / dx).astype(int)
    iy = np.rint((rows[:, 1] - y_min) / dy).astype(int)
    if ix.min() < 0 or ix.max() >= nx or iy.min() < 0 or iy.max() >= ny:
        raise DomainError(f"{path}: grid points fall outside the declared extents")
    samples = np.full((nx, ny), np.nan)
    samples[ix, iy] = rows[:, 2]
    if np.isnan(samples).any():
        raise DomainError(f"{path}: grid has missing or duplicated nodes")
    x = x_min + dx * np.arange(nx)
    y = y_min + dy * np.arange(ny)
    return PointSpreadFunction.from_samples(samples, x, y, quadrature)
