"""Sampled closed Jordan curves.

A curve is a closed polyline ``z_0 ... z_{N-1}`` (with ``z_N == z_0``)
traversed counterclockwise. Arc length is measured along the polyline, so
every integral over the curve is a sum over segments. Each sample also carries
a *native parameter* in ``[0, 2*pi)``: the disk angle for the circle and the
polynomial family, normalized arc length otherwise. Boundary functions of the
form ``g(parameter)`` are defined through it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
import shapely
from scipy.spatial import ConvexHull

from .kernels import blocked_argmax

TWO_PI = 2.0 * math.pi
MIN_SAMPLES = 16
MAX_KOCH_LEVEL = 7
# Dense parameter table used to place polynomial samples at equal arc length.
# Fixed size keeps the samples for N and 2N nested.
_DENSE = 1 << 17


class CurveError(ValueError):
    """Invalid curve data or parameters."""


class AmbiguousLocationError(CurveError):
    """A query point lies on the curve within the location tolerance."""


@dataclass(frozen=True, eq=False)
class CurveSample:
    points: np.ndarray
    cum_len: np.ndarray
    params: np.ndarray
    family_tag: dict[str, Any] | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def length(self) -> float:
        return float(self.cum_len[-1])

    @property
    def arclength(self) -> np.ndarray:
        """Arc position of each sample, ``s_0 = 0``."""
        return self.cum_len[:-1]

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.diff(self.cum_len)

    @property
    def max_segment(self) -> float:
        return float(self.segment_lengths.max())

    @property
    def family(self) -> str | None:
        return None if self.family_tag is None else self.family_tag.get("family")

    @property
    def diameter(self) -> float:
        if "diameter" not in self._cache:
            self._cache["diameter"] = _diameter(self.points)
        return self._cache["diameter"]

    def weights(self) -> np.ndarray:
        """Trapezoid weights ``(ds_{j-1} + ds_j) / 2`` at the samples."""
        ds = self.segment_lengths
        return 0.5 * (ds + np.roll(ds, 1))

    def closed(self) -> np.ndarray:
        return np.append(self.points, self.points[0])

    def point_at(self, index: np.ndarray) -> np.ndarray:
        """Polyline point at fractional sample index (periodic in N)."""
        index = np.mod(np.asarray(index, dtype=float), self.n)
        i = np.floor(index).astype(int)
        i = np.minimum(i, self.n - 1)
        f = index - i
        z = self.closed()
        return z[i] + f * (z[i + 1] - z[i])

    def param_at(self, index: np.ndarray) -> np.ndarray:
        index = np.mod(np.asarray(index, dtype=float), self.n)
        lifted = np.append(self.params, self.params[0] + TWO_PI)
        return np.mod(np.interp(index, np.arange(self.n + 1), lifted), TWO_PI)

    def index_at_param(self, t: np.ndarray) -> np.ndarray:
        lifted = np.append(self.params, self.params[0] + TWO_PI)
        t = self.params[0] + np.mod(np.asarray(t, dtype=float) - self.params[0], TWO_PI)
        return np.interp(t, lifted, np.arange(self.n + 1.0))

    def index_at_arclength(self, s: np.ndarray) -> np.ndarray:
        s = np.mod(np.asarray(s, dtype=float), self.length)
        return np.interp(s, self.cum_len, np.arange(self.n + 1.0))

    def transformed(self, scale: complex = 1.0, shift: complex = 0.0) -> "CurveSample":
        """Image under the similarity ``z -> scale*z + shift``."""
        if scale == 0:
            raise CurveError("similarity scale must be nonzero")
        tag = {"family": "similarity", "scale": complex(scale), "shift": complex(shift),
               "base": self.family_tag}
        return make_curve(self.points * scale + shift, params=self.params,
                          family_tag=tag, check_simple=False)

    def reflected(self, shift: complex = 0.0) -> "CurveSample":
        """Image under ``z -> 1/conj(z - shift)``; the order of samples is kept.

        The reflection preserves arguments about the origin, so a curve that
        winds counterclockwise around ``shift`` stays counterclockwise.
        """
        z = self.points - shift
        if np.any(np.abs(z) == 0):
            raise CurveError("reflection center lies on the curve")
        tag = {"family": "reflection", "shift": complex(shift), "base": self.family_tag}
        return make_curve(1.0 / np.conj(z), params=self.params, family_tag=tag,
                          check_simple=False, orient=False)


@dataclass(frozen=True)
class ProbePoint:
    w: complex
    side: str
    dist: float


def polyline_length(points) -> float:
    z = np.asarray(points, dtype=complex)
    return float(np.abs(np.diff(np.append(z, z[0]))).sum())


def signed_area(points) -> float:
    z = np.asarray(points, dtype=complex)
    zn = np.roll(z, -1)
    return 0.5 * float(np.sum(z.real * zn.imag - zn.real * z.imag))


def make_curve(points, params=None, family_tag=None, check_simple: bool = True,
               orient: bool = True) -> CurveSample:
    """Validate samples and build a :class:`CurveSample`.

    Clockwise input is reversed. If that happens, user-supplied parameters
    lose their meaning and are replaced by normalized arc length.
    """
    z = np.ascontiguousarray(np.asarray(points, dtype=complex).ravel())
    if z.size < MIN_SAMPLES:
        raise CurveError(f"need at least {MIN_SAMPLES} samples, got {z.size}")
    if not np.all(np.isfinite(z)):
        raise CurveError("non-finite sample")
    area = signed_area(z)
    if area == 0:
        raise CurveError("degenerate curve (zero signed area)")
    if area < 0:
        if not orient:
            raise CurveError("curve is clockwise")
        z = z[::-1].copy()
        params = None
    seg = np.abs(np.diff(np.append(z, z[0])))
    if np.any(seg <= 0):
        k = int(np.argmin(seg))
        raise CurveError(f"coincident consecutive samples at index {k}")
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if params is None:
        params = TWO_PI * cum[:-1] / cum[-1]
    else:
        params = np.asarray(params, dtype=float).copy()
        if params.shape != z.shape:
            raise CurveError("params must match the number of samples")
        lifted = params[0] + np.mod(params - params[0], TWO_PI)
        lifted[0] = params[0]
        if np.any(np.diff(lifted) <= 0):
            raise CurveError("native parameter must increase along the curve")
        params = np.mod(params, TWO_PI)
    if check_simple and not shapely.is_simple(shapely.linearrings(np.column_stack([z.real, z.imag]))):
        raise CurveError("polyline is self-intersecting")
    return CurveSample(points=z, cum_len=cum, params=params, family_tag=family_tag)


# --------------------------------------------------------------------------
# named families


def koch_vertices(level: int) -> np.ndarray:
    """Vertices of the level-``level`` Koch prefractal on a unit triangle."""
    if not 0 <= level <= MAX_KOCH_LEVEL:
        raise CurveError(f"koch level must be in [0, {MAX_KOCH_LEVEL}]")
    z = np.exp(1j * (math.pi / 2 + TWO_PI * np.arange(3) / 3)) / math.sqrt(3.0)
    rot = np.exp(-1j * math.pi / 3)  # outward bump for a ccw polygon
    for _ in range(level):
        a = z
        b = np.roll(z, -1)
        d = (b - a) / 3.0
        s1 = a + d
        s2 = a + 2 * d
        tip = s1 + d * rot
        z = np.column_stack([a, s1, tip, s2]).ravel()
    return z


def subdivide_polygon(vertices, n_samples: int) -> np.ndarray:
    """Insert evenly spaced points on each edge; vertices are kept."""
    v = np.asarray(vertices, dtype=complex)
    edges = np.roll(v, -1) - v
    lengths = np.abs(edges)
    total = lengths.sum()
    counts = np.maximum(1, np.ceil(n_samples * lengths / total - 1e-9)).astype(int)
    out = [v[i] + edges[i] * np.arange(m) / m for i, m in enumerate(counts)]
    return np.concatenate(out)


def _polynomial_thetas(c: float, n: int) -> np.ndarray:
    if c == 0:
        return TWO_PI * np.arange(n) / n
    theta = np.linspace(0.0, TWO_PI, _DENSE + 1)
    speed = np.abs(1.0 + 2.0 * c * np.exp(1j * theta))
    s = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(theta))])
    target = s[-1] * np.arange(n) / n
    return np.interp(target, s, theta)


def make_named_curve(family: str | Mapping[str, Any], n_samples: int = 1024, **params) -> CurveSample:
    """Build a curve from a named family.

    Families: ``circle(r)``, ``polynomial(c)`` (boundary of ``z + c z^2``),
    ``polygon(vertices)``, ``koch(level)``. ``family`` may also be a mapping
    ``{"family": ..., "params": {...}}``.
    """
    if isinstance(family, Mapping):
        params = {**dict(family.get("params", {})), **params}
        n_samples = int(family.get("n_samples", n_samples))
        family = family["family"]
    if n_samples < MIN_SAMPLES:
        raise CurveError(f"n_samples must be >= {MIN_SAMPLES}")
    if family == "circle":
        r = float(params.get("r", 1.0))
        if r <= 0:
            raise CurveError("circle radius must be positive")
        theta = TWO_PI * np.arange(n_samples) / n_samples
        return make_curve(r * np.exp(1j * theta), params=theta,
                          family_tag={"family": "circle", "r": r}, check_simple=False)
    if family == "polynomial":
        c = float(params.get("c", 0.0))
        if not 0 <= c < 0.5:
            raise CurveError("polynomial coefficient must satisfy 0 <= c < 1/2 (univalence)")
        theta = _polynomial_thetas(c, n_samples)
        e = np.exp(1j * theta)
        return make_curve(e + c * e * e, params=theta,
                          family_tag={"family": "polynomial", "c": c}, check_simple=False)
    if family == "polygon":
        verts = params.get("vertices")
        if verts is None or len(verts) < 3:
            raise CurveError("polygon needs at least 3 vertices")
        v = np.asarray([complex(*p) if not isinstance(p, complex) else p for p in verts])
        if signed_area(v) < 0:
            v = v[::-1]
        if not shapely.is_simple(shapely.linearrings(np.column_stack([v.real, v.imag]))):
            raise CurveError("polygon is self-intersecting")
        return make_curve(subdivide_polygon(v, n_samples),
                          family_tag={"family": "polygon", "vertices": [[p.real, p.imag] for p in v]})
    if family == "koch":
        level = int(params.get("level", 1))
        v = koch_vertices(level)
        return make_curve(subdivide_polygon(v, n_samples), check_simple=level <= 4,
                          family_tag={"family": "koch", "level": level})
    if family == "square":
        side = float(params.get("side", 1.0))
        h = side / 2
        return make_named_curve("polygon", n_samples,
                                vertices=[(h, -h), (h, h), (-h, h), (-h, -h)])
    raise CurveError(f"unknown curve family {family!r}")


def curve_from_spec(spec: Mapping[str, Any]) -> CurveSample:
    """Curve spec: ``{"family", "params", "n_samples"}`` or ``{"family": "polyline", "points"}``."""
    if not isinstance(spec, Mapping) or "family" not in spec:
        raise CurveError("curve spec needs a 'family' key")
    if spec["family"] == "polyline":
        pts = spec.get("points")
        if not pts:
            raise CurveError("polyline spec needs 'points'")
        z = np.array([complex(x, y) for x, y in pts])
        return make_curve(z, family_tag={"family": "polyline"})
    return make_named_curve(spec)


# --------------------------------------------------------------------------
# resampling and measurement


def reparametrize_arclength(curve: CurveSample, target_length: float | None = None,
                            n_samples: int | None = None) -> CurveSample:
    """Resample at equal arc-length steps, optionally scaling to ``target_length``.

    Samples are placed on the old polyline, so the shape is unchanged; the
    new chords cut corners only between old vertices.
    """
    n = curve.n if n_samples is None else int(n_samples)
    s = curve.length * np.arange(n) / n
    idx = curve.index_at_arclength(s)
    pts = curve.point_at(idx)
    params = curve.param_at(idx)
    out = make_curve(pts, params=params, family_tag=curve.family_tag, check_simple=False)
    if target_length is not None:
        if target_length <= 0:
            raise CurveError("target length must be positive")
        lam = target_length / out.length
        pts = out.points * lam
        seg = np.abs(np.diff(np.append(pts, pts[0])))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        cum *= target_length / cum[-1]
        out = CurveSample(points=pts, cum_len=cum, params=out.params, family_tag=curve.family_tag)
    return out


def curve_length(curve: CurveSample) -> float:
    return curve.length


def curve_diameter(curve: CurveSample) -> float:
    return curve.diameter


def _diameter(z: np.ndarray) -> float:
    xy = np.column_stack([z.real, z.imag])
    try:
        hull = z[ConvexHull(xy).vertices]
    except Exception:  # collinear or tiny input
        hull = z
    d = np.abs(hull[:, None] - hull[None, :])
    return float(d.max())


def _segment_distances(curve: CurveSample, w: np.ndarray) -> np.ndarray:
    a = curve.points
    e = np.roll(a, -1) - a
    e2 = (e * e.conj()).real
    rel = w[:, None] - a[None, :]
    t = np.clip((rel * e.conj()[None, :]).real / e2[None, :], 0.0, 1.0)
    return np.abs(rel - t * e[None, :])


def distance_to_curve(curve: CurveSample, w, chunk: int = 512):
    """Distance from ``w`` (scalar or array) to the polyline."""
    warr = np.atleast_1d(np.asarray(w, dtype=complex))
    out = np.empty(warr.shape, dtype=float)
    flat = warr.ravel()
    res = out.ravel()
    for i in range(0, flat.size, chunk):
        res[i:i + chunk] = _segment_distances(curve, flat[i:i + chunk]).min(axis=1)
    out = res.reshape(warr.shape)
    return float(out[0]) if np.ndim(w) == 0 else out


def winding_number(curve: CurveSample, w, chunk: int = 512):
    warr = np.atleast_1d(np.asarray(w, dtype=complex)).ravel()
    z = curve.points
    zn = np.roll(z, -1)
    out = np.empty(warr.size)
    for i in range(0, warr.size, chunk):
        ww = warr[i:i + chunk, None]
        out[i:i + chunk] = np.angle((zn[None, :] - ww) / (z[None, :] - ww)).sum(axis=1) / TWO_PI
    out = np.rint(out).astype(int)
    return int(out[0]) if np.ndim(w) == 0 else out


def contains_interior(curve: CurveSample, w, tol: float | None = None):
    """True where the curve winds around ``w``.

    Raises :class:`AmbiguousLocationError` for points on the polyline
    (distance below ``tol``, default ``1e-9 * diameter``).
    """
    tol = 1e-9 * curve.diameter if tol is None else tol
    d = np.atleast_1d(distance_to_curve(curve, w))
    if np.any(d <= tol):
        raise AmbiguousLocationError(f"point within {tol:g} of the curve")
    inside = np.abs(np.atleast_1d(winding_number(curve, w))) == 1
    return bool(inside[0]) if np.ndim(w) == 0 else inside


def make_probe(curve: CurveSample, w: complex) -> ProbePoint:
    side = "interior" if contains_interior(curve, w) else "exterior"
    return ProbePoint(w=complex(w), side=side, dist=distance_to_curve(curve, w))


def interior_anchor(curve: CurveSample) -> complex:
    """Vertex centroid if it is inside, else an interior point found by search."""
    c = complex(curve.points.mean())
    try:
        if contains_interior(curve, c):
            return c
    except AmbiguousLocationError:
        pass
    # step inward from each sample along the normal, keep the deepest point
    z = curve.points
    t = np.roll(z, -1) - np.roll(z, 1)
    normal = 1j * t / np.abs(t)
    best, best_d = None, -1.0
    for frac in (0.25, 0.1, 0.03, 0.01):
        cand = z + frac * curve.diameter * normal
        inside = np.abs(winding_number(curve, cand)) == 1
        if np.any(inside):
            d = distance_to_curve(curve, cand[inside])
            k = int(np.argmax(d))
            if d[k] > best_d:
                best, best_d = complex(cand[inside][k]), float(d[k])
    if best is None:
        raise CurveError("could not locate an interior point")
    return best


def chord_arc_constant(curve: CurveSample, return_pair: bool = False, workers: int | None = None):
    """Grid supremum of (shorter arc) / chord over sample pairs.

    The value is a lower bound for the chord-arc constant of the curve the
    samples lie on; it can only grow under refinement.
    """
    z = curve.points
    s = curve.arclength
    L = curve.length
    n = curve.n

    def block(i0, i1):
        zz = z[i0:i1, None]
        chord = np.abs(zz - z[None, :])
        delta = np.abs(s[i0:i1, None] - s[None, :])
        arc = np.minimum(delta, L - delta)
        jj = np.arange(n)[None, :]
        ii = np.arange(i0, i1)[:, None]
        valid = (jj > ii) & (chord > 0)
        ratio = np.where(valid, arc / np.where(chord > 0, chord, 1.0), -np.inf)
        k = int(np.argmax(ratio))
        r, c = divmod(k, n)
        return float(ratio.flat[k]), (i0 + r, c)

    val, pair = blocked_argmax(n, block, workers=workers)
    if not np.isfinite(val):
        raise CurveError("all sample pairs are degenerate")
    return (val, pair) if return_pair else val
