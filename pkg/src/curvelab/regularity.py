"""Ahlfors regularity estimators and the sine-comparison inequalities.

Two estimators are reported side by side:

* ``M_hat``: largest ``length(curve inside B(z, r)) / r`` over a grid of
  centres and dyadic radii (segment-disk intersections are exact).
* ``C_hat``: largest ``d(w) * int |dz| / |z - w|^2`` over probe points ``w``
  placed along discrete normals at dyadic distances plus a coarse grid.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import spearmanr

from .curve import CurveError, CurveSample, distance_to_curve, winding_number
from .kernels import blocked_argmax, blocked_reduce

RESOLUTION_FACTOR = 3.0

log = logging.getLogger(__name__)


class GridError(ValueError):
    """A radius or probe grid violates the resolution floor."""


# --------------------------------------------------------------------------
# ball regularity


def segment_disk_length(p0: np.ndarray, p1: np.ndarray, c, r) -> np.ndarray:
    """Length of each segment ``[p0, p1]`` inside the closed disk ``B(c, r)``.

    Broadcasts over ``c`` and ``r``; solved exactly from the quadratic in the
    segment parameter.
    """
    d = p1 - p0
    f = p0 - c
    a = np.abs(d) ** 2
    b = 2.0 * np.real(np.conj(d) * f)
    cc = np.abs(f) ** 2 - r * r
    disc = b * b - 4.0 * a * cc
    sq = np.sqrt(np.maximum(disc, 0.0))
    t1 = (-b - sq) / (2.0 * a)
    t2 = (-b + sq) / (2.0 * a)
    span = np.clip(np.minimum(t2, 1.0) - np.maximum(t1, 0.0), 0.0, None)
    span = np.where(disc > 0, span, 0.0)
    return np.sqrt(a) * span


def dyadic_radii(curve: CurveSample, per_octave: int = 1, floor_factor: float = 4.0) -> np.ndarray:
    """``diam * 2^(-k/per_octave)`` down to ``floor_factor * max_segment``."""
    diam = curve.diameter
    floor = floor_factor * curve.max_segment
    if floor >= diam:
        raise GridError("curve too coarse for any admissible radius")
    kmax = int(math.floor(per_octave * math.log2(diam / floor)))
    return diam * 2.0 ** (-np.arange(kmax + 1) / per_octave)


def ball_regularity(curve: CurveSample, centers=None, radii=None, center_stride: int = 1,
                    radii_per_octave: int = 1, workers=None):
    """``(M_hat, (z, r))``: max over the grid of ``length(curve in B(z, r)) / r``.

    Default centres are every ``center_stride``-th sample plus the vertex
    centroid; default radii are :func:`dyadic_radii`.
    """
    if radii is None:
        radii = dyadic_radii(curve, radii_per_octave)
    radii = np.asarray(radii, dtype=float)
    floor = 4.0 * curve.max_segment
    if np.any(radii <= floor) or np.any(radii > curve.diameter * (1 + 1e-12)):
        raise GridError(f"radii must lie in ({floor:.3g}, {curve.diameter:.3g}]")
    if centers is None:
        centers = np.append(curve.points[::center_stride], curve.points.mean())
    centers = np.atleast_1d(np.asarray(centers, dtype=complex))
    p0 = curve.points
    p1 = np.roll(p0, -1)

    def block(i0, i1):
        best, arg = -1.0, None
        for r in radii:
            inside = segment_disk_length(p0[None, :], p1[None, :], centers[i0:i1, None], r).sum(axis=1)
            k = int(np.argmax(inside))
            if inside[k] / r > best:
                best, arg = inside[k] / r, (complex(centers[i0 + k]), float(r))
        return best, arg

    value, arg = blocked_argmax(len(centers), block, block=64, workers=workers)
    return float(value), arg


# --------------------------------------------------------------------------
# dual regularity


def segment_inverse_square_integral(curve: CurveSample, w: np.ndarray) -> np.ndarray:
    """``int_curve |dz| / |z - w|^2`` for each probe, exact per segment."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    p0 = curve.points[None, :]
    d = np.roll(curve.points, -1)[None, :] - p0
    ell = np.abs(d)
    e = d / ell
    rel = (w[:, None] - p0) / e  # segment along the positive real axis
    x0 = rel.real
    h = np.abs(rel.imag)
    a = -x0
    b = ell - x0
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = (np.arctan(b / h) - np.arctan(a / h)) / h
    # collinear probes (off the segment itself) reduce to 1/a - 1/b
    line = 1.0 / np.where(a == 0, np.inf, a) - 1.0 / np.where(b == 0, np.inf, b)
    small = h <= 1e-12 * ell
    out = np.where(small, line, exact)
    return out.sum(axis=1)


def normal_probes(curve: CurveSample, k_max: int | None = None) -> np.ndarray:
    """Points at distance ``2^-k * diam`` along the discrete normal, both sides."""
    z = curve.points
    tangent = np.roll(z, -1) - np.roll(z, 1)
    normal = -1j * tangent / np.abs(tangent)  # outward for counterclockwise curves
    diam = curve.diameter
    floor = RESOLUTION_FACTOR * curve.max_segment
    if k_max is None:
        k_max = int(math.floor(math.log2(diam / floor))) if diam > floor else 1
    ds = diam * 2.0 ** -np.arange(2, k_max + 1)
    ds = ds[ds >= floor]
    offs = np.concatenate([ds, -ds])
    return (z[None, :] + offs[:, None] * normal[None, :]).ravel()


def grid_probes(curve: CurveSample, size: int = 33, margin: float = 0.25) -> np.ndarray:
    """Odd-sized square grid over the enlarged bounding box (contains its centre)."""
    if size % 2 == 0:
        size += 1
    z = curve.points
    lo = complex(z.real.min(), z.imag.min())
    hi = complex(z.real.max(), z.imag.max())
    span = max(hi.real - lo.real, hi.imag - lo.imag) * (1.0 + 2.0 * margin)
    mid = 0.5 * (lo + hi)
    t = np.linspace(-0.5, 0.5, size) * span
    return (mid + t[None, :] + 1j * t[:, None]).ravel()


def generate_probes(curve: CurveSample, k_max: int | None = None, grid_size: int = 33):
    """Probe points and their distances, filtered by the resolution floor."""
    w = np.concatenate([normal_probes(curve, k_max), grid_probes(curve, grid_size)])
    d = distance_to_curve(curve, w)
    on_curve = d <= 1e-12 * curve.diameter
    if np.any(on_curve):
        log.warning("%d probe(s) on the curve excluded", int(on_curve.sum()))
    keep = d >= RESOLUTION_FACTOR * curve.max_segment
    return w[keep], d[keep]


@dataclass
class Probe:
    w: complex
    d: float
    integral: float
    side: str

    @property
    def product(self) -> float:
        return self.d * self.integral


def dual_regularity(curve: CurveSample, probes=None, k_max: int | None = None, grid_size: int = 33,
                    workers=None):
    """``(C_hat, argmax probe, all probes)`` for ``d(w) * int |dz| / |z - w|^2``."""
    if probes is None:
        w, d = generate_probes(curve, k_max, grid_size)
    else:
        w = np.atleast_1d(np.asarray(probes, dtype=complex))
        d = distance_to_curve(curve, w)
        floor = RESOLUTION_FACTOR * curve.max_segment
        if np.any(d < floor):
            raise GridError(f"probe closer than the resolution floor {floor:.3g}")
    if w.size == 0:
        raise GridError("no admissible probes")

    def block(i0, i1):
        return [segment_inverse_square_integral(curve, w[i0:i1])]

    integrals = blocked_reduce(w.size, block, lambda parts: np.concatenate([q for p in parts for q in p]),
                               block=128, workers=workers)
    inside = winding_number(curve, w) != 0
    probes_out = [Probe(complex(wi), float(di), float(ii), "interior" if s else "exterior")
                  for wi, di, ii, s in zip(w, d, integrals, inside)]
    products = d * integrals
    k = int(np.argmax(products))
    return float(products[k]), probes_out[k], probes_out


# --------------------------------------------------------------------------
# sine comparison


def lemma_sin_slack(curve: CurveSample, K: float | None = None, rtol: float = 1e-9, workers=None):
    """Minimum slacks of ``pi|sin(dt/2)| - |z(t) - z(s)|`` and, when ``K`` is
    given, of ``|z(t) - z(s)| - (2/K)|sin(dt/2)|`` over sample pairs.

    ``t`` is arc length, so the curve must have length ``2 pi``.
    """
    if abs(curve.length - 2.0 * math.pi) > rtol * 2.0 * math.pi:
        raise CurveError(f"curve length {curve.length!r} is not 2*pi; rescale first")
    t = curve.arclength
    z = curve.points
    n = curve.n

    def block(i0, i1):
        s = np.abs(np.sin(0.5 * (t[i0:i1, None] - t[None, :])))
        chord = np.abs(z[i0:i1, None] - z[None, :])
        rows = np.arange(i1 - i0)
        g1 = math.pi * s - chord
        g1[rows, rows + i0] = np.inf
        m1 = float(g1.min())
        m2 = None
        if K is not None:
            g2 = chord - (2.0 / K) * s
            g2[rows, rows + i0] = np.inf
            m2 = float(g2.min())
        return m1, m2

    def combine(parts):
        m1 = min(p[0] for p in parts)
        m2 = None if K is None else min(p[1] for p in parts)
        return m1, m2

    return blocked_reduce(n, block, combine, workers=workers)


def rescale_to_2pi(curve: CurveSample) -> CurveSample:
    return curve.transformed(scale=2.0 * math.pi / curve.length)


# --------------------------------------------------------------------------


@dataclass
class RegularityReport:
    name: str
    K_hat: float
    M_hat: float
    M_argmax: tuple
    C_hat: float
    C_argmax: Probe
    probes: list = field(default_factory=list, repr=False)
    grids: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {
            "curve": self.name, "K_hat": self.K_hat, "M_hat": self.M_hat,
            "M_center": [self.M_argmax[0].real, self.M_argmax[0].imag], "M_radius": self.M_argmax[1],
            "C_hat": self.C_hat, "C_probe": [self.C_argmax.w.real, self.C_argmax.w.imag],
            "C_probe_d": self.C_argmax.d, "n_probes": len(self.probes),
        }


def regularity_report(curve: CurveSample, name: str = "curve", grid_size: int = 33,
                      radii_per_octave: int = 1, center_stride: int = 1, workers=None) -> RegularityReport:
    from .curve import chord_arc_constant

    K = chord_arc_constant(curve, workers=workers)
    M, marg = ball_regularity(curve, center_stride=center_stride, radii_per_octave=radii_per_octave,
                              workers=workers)
    C, carg, probes = dual_regularity(curve, grid_size=grid_size, workers=workers)
    grids = {"grid_size": grid_size, "radii_per_octave": radii_per_octave, "center_stride": center_stride,
             "resolution_floor": RESOLUTION_FACTOR * curve.max_segment}
    return RegularityReport(name, K, M, marg, C, carg, probes, grids)


def rank_concordance(a, b) -> float:
    """Spearman rank correlation of two estimator columns."""
    if len(a) < 2:
        raise ValueError("need at least two rows")
    return float(spearmanr(a, b).statistic)
