"""Conformal maps of the unit disk onto Jordan domains.

Two kinds of map are provided. Closed-form maps cover the circle and the
polynomial family ``z + c z^2``. Every other curve goes through
:class:`ZipperMap`, a geodesic zipper: the domain is opened onto the upper
half-plane one boundary sample at a time by elementary slit maps, and the
disk map is the inverse of that composition followed by a Cayley transform.

Exterior maps are built on the reflected curve ``iota(Gamma - a)`` with
``iota(z) = 1/conj(z)``, whose interior is the reflected exterior domain.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .curve import (
    TWO_PI,
    CurveSample,
    contains_interior,
    interior_anchor,
)

EPS_EVAL = 1e-9


class MapError(ValueError):
    """Bad input to a conformal map."""


class ZipperError(MapError):
    """The zipper composition broke down at a given sample."""

    def __init__(self, index: int, message: str):
        super().__init__(f"sample {index}: {message}")
        self.index = index


class ConformalMap:
    """Map of the unit disk onto the interior of ``self.curve``.

    For an exterior map, ``self.curve`` is the reflected curve and
    ``self.source`` is the original one; ``self.shift`` is the translation
    that put the reflection center at the origin.

    ``angles[j]`` is the prevertex angle of curve sample ``j`` (lifted,
    strictly increasing over one turn).
    """

    kind = "abstract"

    def __init__(self, curve: CurveSample, side: str, anchor: complex, shift: complex,
                 angles: np.ndarray, source: CurveSample | None = None):
        if side not in ("interior", "exterior_reflected"):
            raise MapError(f"unknown side {side!r}")
        self.curve = curve
        self.side = side
        self.anchor = complex(anchor)
        self.shift = complex(shift)
        self.angles = np.asarray(angles, dtype=float)
        self.source = curve if source is None else source
        d = np.diff(self.angles)
        if np.any(d <= 0) or self.angles[-1] - self.angles[0] >= TWO_PI:
            raise MapError("boundary table must be strictly increasing over one turn")

    # evaluation -----------------------------------------------------------
    def _eval(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _deriv(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, z):
        return eval_map(self, z)

    # boundary correspondence ---------------------------------------------
    def boundary_index(self, theta) -> np.ndarray:
        """Fractional sample index of the boundary image of ``exp(i*theta)``."""
        n = self.curve.n
        a0 = self.angles[0]
        lifted = np.append(self.angles, a0 + TWO_PI)
        t = a0 + np.mod(np.asarray(theta, dtype=float) - a0, TWO_PI)
        return np.mod(np.interp(t, lifted, np.arange(n + 1.0)), n)

    def boundary(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """Boundary points (in the map's own plane) and native parameters."""
        idx = self.boundary_index(theta)
        return self.curve.point_at(idx), self.curve.param_at(idx)

    def boundary_on_source(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """Boundary points on the original curve, undoing any reflection."""
        pts, params = self.boundary(theta)
        if self.side == "exterior_reflected":
            pts = self.shift + 1.0 / np.conj(pts)
        return pts, params

    @property
    def engine(self) -> str:
        return self.kind

    def precompose(self, a: complex, rotation: float = 0.0) -> "ComposedMap":
        """``phi o m`` with the disk automorphism ``m(z) = e^{i rot}(z + a)/(1 + conj(a) z)``."""
        return ComposedMap(self, a, rotation)


class ClosedFormMap(ConformalMap):
    """``phi(z) = r z`` (circle) or ``phi(z) = z + c z^2`` (polynomial)."""

    kind = "closed_form"

    def __init__(self, family: str, value: float, curve: CurveSample | None = None,
                 side: str = "interior", source: CurveSample | None = None, shift: complex = 0.0):
        self.family = family
        self.value = float(value)
        if family == "circle":
            if self.value <= 0:
                raise MapError("radius must be positive")
        elif family == "polynomial":
            if not 0 <= abs(self.value) < 0.5:
                raise MapError("|c| must be < 1/2")
        else:
            raise MapError(f"no closed-form map for family {family!r}")
        if curve is None:
            from .curve import make_named_curve

            key = "r" if family == "circle" else "c"
            curve = make_named_curve(family, 1024, **{key: self.value})
        if family == "circle":
            angles = np.unwrap(np.angle(curve.points))
        else:
            angles = np.unwrap(curve.params)
        super().__init__(curve, side, 0.0, shift, angles, source)

    def _eval(self, z):
        if self.family == "circle":
            return self.value * z
        return z + self.value * z * z

    def _deriv(self, z):
        if self.family == "circle":
            return np.full_like(z, self.value)
        return 1.0 + 2.0 * self.value * z

    def boundary(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self._eval(np.exp(1j * theta)), np.mod(theta, TWO_PI)


def closed_form_interior_map(family, curve: CurveSample | None = None) -> ClosedFormMap:
    """Registry of exact maps. ``family`` is ``("circle", r)``, ``("polynomial", c)``
    or a family tag mapping such as ``curve.family_tag``."""
    if isinstance(family, dict):
        name = family.get("family")
        value = family.get("r") if name == "circle" else family.get("c")
    else:
        name, value = family
    if value is None:
        raise MapError(f"unsupported family {family!r}")
    if curve is not None and curve.family_tag != {"family": name, ("r" if name == "circle" else "c"): float(value)}:
        raise MapError("curve was not sampled from this family")
    return ClosedFormMap(name, value, curve)


def closed_form_exterior_map(curve: CurveSample) -> ClosedFormMap:
    """Reflected-exterior map for a circle centred at the origin: ``z/r``."""
    if curve.family != "circle":
        raise MapError("closed-form exterior map exists only for circles")
    r = curve.family_tag["r"]
    return ClosedFormMap("circle", 1.0 / r, curve.reflected(0.0), side="exterior_reflected",
                         source=curve, shift=0.0)


# --------------------------------------------------------------------------
# zipper engine


def _sqrt_upper(w):
    s = np.sqrt(w)
    return np.where(s.imag < 0, -s, s)


def _slit_sqrt(w, c):
    """Branch of ``sqrt(w^2 + c^2)`` mapping the slit half-plane onto H.

    For ``|w| > c`` the form ``w sqrt(1 + (c/w)^2)`` avoids overflow and is
    already the right branch (``1 + (c/w)^2`` stays in the right half-plane).
    """
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    big = np.abs(w) > c
    wb = w[big]
    r = c / wb
    out[big] = wb * np.sqrt(1.0 + r * r)
    ws = w[~big]
    out[~big] = np.sqrt(ws * ws + c * c)
    return np.where(out.imag < 0, -out, out)


def _slit_sqrt_inv(x, c):
    """Inverse branch ``sqrt(x^2 - c^2)`` in the upper half-plane."""
    x = np.asarray(x, dtype=complex)
    out = np.empty_like(x)
    big = np.abs(x) > c
    xb = x[big]
    r = c / xb
    out[big] = xb * np.sqrt(1.0 - r * r)
    xs = x[~big]
    out[~big] = np.sqrt(xs * xs - c * c)
    return np.where(out.imag < 0, -out, out)


def _moebius_T(x, b):
    """``x / (1 - x/b)``; ``b = inf`` means identity."""
    if np.isinf(b):
        return x
    with np.errstate(divide="ignore", invalid="ignore"):
        return x / (1.0 - x / b)


def _hypot_inf(x, c):
    with np.errstate(invalid="ignore"):
        return np.where(np.isinf(x), np.inf, np.hypot(x, c))


def _real_step(x: np.ndarray, b: float, c: float) -> np.ndarray:
    """Slit map applied to prevertices on the real line (``+-inf`` allowed)."""
    out = np.empty_like(x)
    inf = np.isinf(x)
    fin = ~inf
    tx = _moebius_T(x[fin], b)
    out[fin] = np.sign(tx) * _hypot_inf(tx, c)
    if np.any(inf):
        out[inf] = -b if np.isfinite(b) else x[inf]
        # T(inf) = -b is a finite real point; push it through the square root
        finite_img = np.isfinite(out) & inf
        v = out[finite_img]
        out[finite_img] = np.sign(v) * _hypot_inf(v, c)
    return out


class ZipperMap(ConformalMap):
    """Geodesic zipper map fitted to the samples of a curve."""

    kind = "numeric_composition"

    def __init__(self, curve: CurveSample, side: str, anchor: complex, shift: complex,
                 z0: complex, z1: complex, bs: np.ndarray, cs: np.ndarray, x_end: float,
                 A: complex, gamma: float, angles: np.ndarray, source: CurveSample | None = None):
        self.z0, self.z1 = complex(z0), complex(z1)
        self.bs = np.asarray(bs, dtype=float)
        self.cs = np.asarray(cs, dtype=float)
        self.x_end = float(x_end)
        self.A = complex(A)
        self.gamma = float(gamma)
        super().__init__(curve, side, anchor, shift, angles, source)

    # inverse chain: disk -> half-plane -> ... -> domain
    def _chain(self, zeta: np.ndarray, want_deriv: bool):
        rot = np.exp(1j * self.gamma)
        z0 = rot * zeta
        A, Ab = self.A, np.conj(self.A)
        y = (A - Ab * z0) / (1.0 - z0)
        d = rot * (A - Ab) / (1.0 - z0) ** 2 if want_deriv else None
        t = -np.sqrt(-y)
        if want_deriv:
            d = d * (-0.5 / t)
        x = _moebius_T_inv(t, self.x_end)
        if want_deriv:
            d = d * _moebius_T_inv_deriv(t, self.x_end)
        for b, c in zip(self.bs[::-1], self.cs[::-1]):
            x = c * x
            if want_deriv:
                d = d * c
            w = _slit_sqrt_inv(x, c)
            if want_deriv:
                d = d * (x / w)
            x = _moebius_T_inv(w, b)
            if want_deriv:
                d = d * _moebius_T_inv_deriv(w, b)
        x2 = x * x
        z = (self.z1 + self.z0 * x2) / (1.0 + x2)
        if want_deriv:
            d = d * 2.0 * x * (self.z0 - self.z1) / (1.0 + x2) ** 2
        return z, d

    def _eval(self, z):
        return self._chain(z, False)[0]

    def _deriv(self, z):
        return self._chain(z, True)[1]

    def to_dict(self) -> dict[str, Any]:
        return {
            "engine": "geodesic-zipper/1",
            "side": self.side,
            "anchor": [self.anchor.real, self.anchor.imag],
            "shift": [self.shift.real, self.shift.imag],
            "z0": [self.z0.real, self.z0.imag],
            "z1": [self.z1.real, self.z1.imag],
            "b": [repr(float(v)) for v in self.bs],
            "c": [repr(float(v)) for v in self.cs],
            "x_end": repr(self.x_end),
            "A": [self.A.real, self.A.imag],
            "gamma": self.gamma,
            "angles": [repr(float(v)) for v in self.angles],
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path, curve: CurveSample, source: CurveSample | None = None) -> "ZipperMap":
        with open(path) as fh:
            d = json.load(fh)
        c2 = lambda v: complex(v[0], v[1])  # noqa: E731
        return cls(curve, d["side"], c2(d["anchor"]), c2(d["shift"]), c2(d["z0"]), c2(d["z1"]),
                   np.array([float(v) for v in d["b"]]), np.array([float(v) for v in d["c"]]),
                   float(d["x_end"]), c2(d["A"]), float(d["gamma"]),
                   np.array([float(v) for v in d["angles"]]), source)


def _moebius_T_inv(t, b):
    if np.isinf(b):
        return t
    return t / (1.0 + t / b)


def _moebius_T_inv_deriv(t, b):
    if np.isinf(b):
        return np.ones_like(t)
    return 1.0 / (1.0 + t / b) ** 2


def _zip(points: np.ndarray, anchor: complex, im_tol: float = 0.0):
    """Forward pass. Returns the elementary-map parameters, the half-plane
    image of the anchor and the real prevertices of every sample."""
    n = len(points)
    z0, z1 = points[0], points[1]
    pend = np.append(points[2:], anchor)
    with np.errstate(divide="ignore", invalid="ignore"):
        pend = 1j * np.sqrt((pend - z1) / (pend - z0))
    pre = np.array([np.inf, 0.0])
    bs = np.empty(n - 2)
    cs = np.empty(n - 2)
    for k in range(2, n):
        a = pend[0]
        if not a.imag > im_tol or not np.isfinite(a):
            raise ZipperError(k, "image left the upper half-plane (non-Jordan or "
                              "near-collinear samples)")
        aa = a.real * a.real + a.imag * a.imag
        b = aa / a.real if a.real != 0 else np.inf
        c = aa / a.imag
        bs[k - 2], cs[k - 2] = b, c
        w = _moebius_T(pend[1:], b)
        # divide by c afterwards: positive scaling preserves H and stops the
        # configuration from growing geometrically along the sweep
        pend = _slit_sqrt(w, c) / c
        newpre = _real_step(pre, b, c) / c
        newpre[-1] = -1.0  # previous tip sits at the slit base, domain side
        pre = np.append(newpre, 0.0)
    return z0, z1, bs, cs, pend[0], pre


def fit_numeric_map(curve: CurveSample, side: str = "interior", anchor: complex | None = None) -> ZipperMap:
    """Fit a zipper map to the samples of ``curve``.

    ``side="interior"`` maps onto the interior with ``phi(0) = anchor``.
    ``side="exterior_reflected"`` shifts the curve so ``anchor`` sits at the
    origin, reflects it and maps onto the interior of the reflected curve
    with ``phi(0) = 0``. In both cases ``phi'(0) > 0``.
    """
    if side == "interior":
        a = interior_anchor(curve) if anchor is None else complex(anchor)
        if not contains_interior(curve, a):
            raise MapError("anchor must lie inside the curve")
        target, shift, source = curve, 0.0, None
        local_anchor = a
    elif side == "exterior_reflected":
        shift = interior_anchor(curve) if anchor is None else complex(anchor)
        if not contains_interior(curve, shift):
            raise MapError("reflection center must lie inside the curve")
        target = curve.reflected(shift)
        source = curve
        local_anchor = 0.0
        a = 0.0
    else:
        raise MapError(f"unknown side {side!r}")

    pts = target.points
    scale = float(np.abs(pts - local_anchor).max())
    z0, z1, bs, cs, a_img, pre = _zip((pts - local_anchor) / scale, 0.0)
    x_end = pre[0]

    # last geodesic -> imaginary axis, second quadrant -> upper half-plane
    def final(x):
        t = _moebius_T(x, x_end)
        return -(t * t)

    A = complex(final(np.asarray(a_img)))
    if not A.imag > 0:
        raise ZipperError(0, "anchor did not land in the upper half-plane (orientation)")
    y = final(pre[1:].astype(complex))
    disk = np.concatenate([[1.0 + 0j], (y - A) / (y - np.conj(A))])
    theta0 = np.unwrap(np.angle(disk))
    if np.any(np.diff(theta0) <= 0) or theta0[-1] - theta0[0] >= TWO_PI:
        k = int(np.argmin(np.diff(theta0)))
        raise ZipperError(k + 1, "prevertices are not monotone")

    # the chain is affine-covariant in (z0, z1): undo the normalization there
    m = ZipperMap(target, side, a, shift, local_anchor + scale * z0, local_anchor + scale * z1,
                  bs, cs, x_end, A, 0.0, theta0, source)
    q = m._chain(np.zeros(1, dtype=complex), True)[1][0]
    m.gamma = -math.atan2(q.imag, q.real)
    m.angles = theta0 - m.gamma
    return m


def fit_map(curve: CurveSample, side: str = "interior", engine: str = "auto",
            anchor: complex | None = None) -> ConformalMap:
    """Closed-form map where the family allows it (``engine='auto'``), else zipper."""
    if engine not in ("auto", "closed_form", "numeric"):
        raise MapError(f"unknown engine {engine!r}")
    if engine != "numeric":
        try:
            if side == "interior" and curve.family in ("circle", "polynomial"):
                return closed_form_interior_map(curve.family_tag, curve)
            if side == "exterior_reflected" and curve.family == "circle":
                return closed_form_exterior_map(curve)
        except MapError:
            if engine == "closed_form":
                raise
        if engine == "closed_form":
            raise MapError(f"no closed-form {side} map for family {curve.family!r}")
    return fit_numeric_map(curve, side, anchor)


class ComposedMap(ConformalMap):
    """``base o m`` for a disk automorphism ``m``."""

    def __init__(self, base: ConformalMap, a: complex, rotation: float = 0.0):
        if abs(a) >= 1:
            raise MapError("automorphism parameter must lie in the disk")
        self.base = base
        self.a = complex(a)
        self.rot = np.exp(1j * rotation)
        self.kind = base.kind
        theta = base.angles
        # prevertex of sample j under base o m is m^{-1}(exp(i theta_j))
        e = np.exp(1j * theta) / self.rot
        pre = (e - self.a) / (1.0 - np.conj(self.a) * e)
        ang = np.unwrap(np.angle(pre))
        if ang[-1] < ang[0]:
            raise MapError("automorphism reversed the boundary")
        ConformalMap.__init__(self, base.curve, base.side, base(self._m(np.zeros(1))[0]),
                              base.shift, ang, base.source)

    def _m(self, z):
        return self.rot * (z + self.a) / (1.0 + np.conj(self.a) * z)

    def _m_deriv(self, z):
        return self.rot * (1.0 - abs(self.a) ** 2) / (1.0 + np.conj(self.a) * z) ** 2

    def _eval(self, z):
        return self.base._eval(self._m(z))

    def _deriv(self, z):
        return self.base._deriv(self._m(z)) * self._m_deriv(z)

    def boundary(self, theta):
        e = self._m(np.exp(1j * np.asarray(theta, dtype=float)))
        return self.base.boundary(np.angle(e))


# --------------------------------------------------------------------------
# evaluation helpers


def _check_disk(z, eps: float):
    zz = np.asarray(z, dtype=complex)
    if np.any(np.abs(zz) > 1 - eps) or np.any(np.abs(zz) >= 1):
        raise MapError("evaluation point outside the open unit disk")
    return zz


def eval_map(m: ConformalMap, z):
    zz = np.asarray(z, dtype=complex)
    if np.any(np.abs(zz) >= 1):
        raise MapError("evaluation point outside the open unit disk")
    out = m._eval(np.atleast_1d(zz).astype(complex))
    return complex(out[0]) if np.ndim(z) == 0 else out.reshape(np.shape(z))


def eval_derivative(m: ConformalMap, z, eps: float = EPS_EVAL):
    zz = _check_disk(z, eps)
    out = m._deriv(np.atleast_1d(zz).astype(complex))
    return complex(out[0]) if np.ndim(z) == 0 else out.reshape(np.shape(z))


def hyperbolic_density(m: ConformalMap, z, eps: float = EPS_EVAL):
    """Hyperbolic density of the image domain at ``phi(z)``:
    ``1 / ((1 - |z|^2) |phi'(z)|)``."""
    zz = _check_disk(z, eps)
    d = np.abs(eval_derivative(m, zz, eps))
    lam = 1.0 / ((1.0 - np.abs(zz) ** 2) * d)
    return float(lam) if np.ndim(z) == 0 else lam


# --------------------------------------------------------------------------
# welding and quasisymmetry


@dataclass(frozen=True)
class Welding:
    """Lifted circle homeomorphism table, ``x -> h(x)``, both strictly increasing,
    with ``h(x + 2 pi) = h(x) + 2 pi``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.size < 2:
            raise MapError("welding table needs matching arrays")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(y) <= 0):
            raise MapError("welding table must be strictly increasing (degenerate or reversed)")
        if x[-1] - x[0] >= TWO_PI or y[-1] - y[0] >= TWO_PI:
            raise MapError("welding table must cover less than one turn")

    def __call__(self, theta):
        x0 = self.x[0]
        t = np.asarray(theta, dtype=float)
        turns = np.floor((t - x0) / TWO_PI)
        r = t - turns * TWO_PI
        xs = np.append(self.x, x0 + TWO_PI)
        ys = np.append(self.y, self.y[0] + TWO_PI)
        return np.interp(r, xs, ys) + turns * TWO_PI


def compute_welding(interior_map: ConformalMap, exterior_map: ConformalMap) -> Welding:
    """``h = phi^{-1} o psi`` on the circle, with ``psi = iota o phi_tilde o iota``.

    On the circle ``iota`` is the identity, so sample ``j`` of the curve has
    exterior prevertex ``exterior_map.angles[j]`` and interior prevertex
    ``interior_map.angles[j]``; the welding pairs them.
    """
    if interior_map.side != "interior" or exterior_map.side != "exterior_reflected":
        raise MapError("need an interior map and a reflected exterior map")
    src_i = interior_map.source
    src_e = exterior_map.source
    if src_i.n != src_e.n or not np.array_equal(src_i.points, src_e.points):
        raise MapError("maps were fitted to different curves")
    x = np.asarray(exterior_map.angles, dtype=float)
    y = np.asarray(interior_map.angles, dtype=float)
    k = int(np.argmin(np.mod(x, TWO_PI)))
    x = np.roll(x, -k)
    y = np.roll(y, -k)
    x = x[0] % TWO_PI + np.concatenate([[0.0], np.cumsum(np.mod(np.diff(x), TWO_PI))])
    y = y[0] % TWO_PI + np.concatenate([[0.0], np.cumsum(np.mod(np.diff(y), TWO_PI))])
    return Welding(x, y)


def dyadic_alphas(m: int = 8) -> np.ndarray:
    return math.pi / 2.0 ** np.arange(1, m + 1)


def quasisymmetry_constant(h: Welding, alphas=None, n_theta: int | None = None,
                           return_argmax: bool = False):
    """Grid estimate of the quasisymmetry constant of ``h``.

    Maximum over ``theta`` (uniform, ``n_theta`` points) and ``alpha`` of
    ``max(q, 1/q)``, ``q`` the ratio of the chords subtended by the images of
    ``[theta, theta+alpha]`` and ``[theta-alpha, theta]``.
    """
    alphas = dyadic_alphas() if alphas is None else np.asarray(alphas, dtype=float)
    if np.any(alphas <= 0) or np.any(alphas > math.pi / 2 + 1e-15):
        raise MapError("alphas must lie in (0, pi/2]")
    n_theta = len(h.x) if n_theta is None else n_theta
    theta = h.x[0] + TWO_PI * np.arange(n_theta) / n_theta
    h0 = h(theta)
    best, arg = 1.0, (float(theta[0]), float(alphas[0]))
    for al in alphas:
        hp = h(theta + al)
        hm = h(theta - al)
        num = 2.0 * np.abs(np.sin((hp - h0) / 2.0))
        den = 2.0 * np.abs(np.sin((h0 - hm) / 2.0))
        if np.any(num <= 0) or np.any(den <= 0):
            raise MapError("degenerate welding table (repeated values)")
        q = num / den
        r = np.maximum(q, 1.0 / q)
        k = int(np.argmax(r))
        if r[k] > best:
            best, arg = float(r[k]), (float(theta[k]), float(al))
    return (best, arg) if return_argmax else best
