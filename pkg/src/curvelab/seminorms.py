"""The three boundary seminorms on a sampled curve.

* ``besov_seminorm``: double integral over the curve with kernel
  ``|u(z) - u(zeta)|^p / |z - zeta|^2``, normalized by ``1/4pi^2``.
* ``interior_seminorm``: p-Dirichlet energy of the harmonic extension into
  the interior, computed on the disk after pulling back by a conformal map.
* ``exterior_seminorm``: the same for the exterior, through the reflection
  ``iota(z) = 1/conj(z)``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .conformal import ConformalMap, MapError, fit_map
from .curve import CurveSample, contains_interior, distance_to_curve
from .harmonic import analyze_boundary, disk_dirichlet_energy
from .kernels import blocked_sum

FOUR_PI2 = 4.0 * math.pi ** 2
RESOLUTION_FACTOR = 3.0


class ResolutionError(ValueError):
    """The sampling cannot resolve the requested quantity."""


# --------------------------------------------------------------------------
# boundary functions


class BoundaryFunction:
    """A trace on the curve, evaluated from points and native parameters."""

    kind = "abstract"
    name = "u"

    def evaluate(self, z, t) -> np.ndarray:
        raise NotImplementedError

    def on_curve(self, curve: CurveSample) -> np.ndarray:
        return self.evaluate(curve.points, curve.params)

    def scaled(self, c: complex) -> "BoundaryFunction":
        return Scaled(self, c)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class Pole(BoundaryFunction):
    """``u(z) = 1/(z - w)``."""

    kind = "pole"

    def __init__(self, w: complex):
        self.w = complex(w)
        self.name = f"pole:{self.w.real:g}{self.w.imag:+g}j"

    def evaluate(self, z, t):
        return 1.0 / (np.asarray(z, dtype=complex) - self.w)


class Composed(BoundaryFunction):
    """``u = g(native parameter)``."""

    kind = "composed"

    def __init__(self, g: Callable[[np.ndarray], np.ndarray], name: str = "g"):
        self.g = g
        self.name = name

    def evaluate(self, z, t):
        return np.asarray(self.g(np.asarray(t, dtype=float)), dtype=complex)


class Tabulated(BoundaryFunction):
    """Values at the samples of a curve, interpolated linearly in the parameter."""

    kind = "tabulated"

    def __init__(self, curve: CurveSample, values, name: str = "tab"):
        values = np.asarray(values, dtype=complex)
        if values.shape != (curve.n,):
            raise ValueError("tabulated values must match the curve resolution")
        self.curve = curve
        self.values = values
        self.name = name

    def evaluate(self, z, t):
        idx = self.curve.index_at_param(t)
        v = np.append(self.values, self.values[0])
        i = np.minimum(np.floor(idx).astype(int), self.curve.n - 1)
        f = idx - i
        return v[i] + f * (v[i + 1] - v[i])


class Scaled(BoundaryFunction):
    def __init__(self, base: BoundaryFunction, c: complex):
        self.base = base
        self.c = complex(c)
        self.kind = base.kind
        self.name = f"{self.c:g}*{base.name}"

    @property
    def w(self):
        return self.base.w

    def evaluate(self, z, t):
        return self.c * self.base.evaluate(z, t)


class Constant(BoundaryFunction):
    kind = "composed"

    def __init__(self, value: complex = 1.0):
        self.value = complex(value)
        self.name = f"const:{self.value:g}"

    def evaluate(self, z, t):
        return np.full(np.shape(t), self.value, dtype=complex)


def trig(kind: str, n: int) -> Composed:
    """``cos(n t)``, ``sin(n t)`` or ``exp(i n t)`` in the native parameter."""
    funcs = {"cos": np.cos, "sin": np.sin, "exp": lambda x: np.exp(1j * x)}
    if kind not in funcs:
        raise ValueError(f"unknown trigonometric kind {kind!r}")
    f = funcs[kind]
    return Composed(lambda t: f(n * t), f"{kind}:{n}")


def random_trig_poly(degree: int, rng: np.random.Generator, real: bool = True) -> Composed:
    a = rng.standard_normal(degree + 1)
    b = rng.standard_normal(degree + 1)
    if not real:
        a = a + 1j * rng.standard_normal(degree + 1)
        b = b + 1j * rng.standard_normal(degree + 1)
    b[0] = 0.0
    n = np.arange(degree + 1)

    def g(t):
        t = np.asarray(t, dtype=float)[..., None]
        return (a * np.cos(n * t) + b * np.sin(n * t)).sum(axis=-1)

    return Composed(g, f"trig{'' if real else 'c'}:{degree}")


def parse_function(spec: str, seed: int = 0) -> BoundaryFunction:
    """``cos:3``, ``sin:2``, ``exp:1``, ``pole:1.5+0.2j``, ``const:1``, ``trig:8``."""
    kind, _, arg = spec.partition(":")
    if kind in ("cos", "sin", "exp"):
        return trig(kind, int(arg or 1))
    if kind == "pole":
        return Pole(complex(arg.replace(" ", "")))
    if kind == "const":
        return Constant(complex(arg or 1))
    if kind in ("trig", "trigc"):
        return random_trig_poly(int(arg or 8), np.random.default_rng(seed), real=kind == "trig")
    raise ValueError(f"unknown function spec {spec!r}")


# --------------------------------------------------------------------------
# Besov seminorm on the curve


def arclength_derivative(curve: CurveSample, values: np.ndarray) -> np.ndarray:
    """Three-point derivative in arc length on the (nonuniform) samples."""
    ds = curve.segment_lengths
    h2 = ds
    h1 = np.roll(ds, 1)
    up = np.roll(values, -1) - values
    dn = values - np.roll(values, 1)
    return (h1 * h1 * up + h2 * h2 * dn) / (h1 * h2 * (h1 + h2))


def _pair_sum(kernel_pts, values, weights, p, diag=None, workers=None) -> float:
    """``sum_{j != k} |v_j - v_k|^p / |x_j - x_k|^2 w_j w_k (+ diagonal)``."""
    n = len(values)

    def block(i0, i1):
        dv = np.abs(values[i0:i1, None] - values[None, :]) ** p
        dx = np.abs(kernel_pts[i0:i1, None] - kernel_pts[None, :]) ** 2
        rows = np.arange(i1 - i0)
        dx[rows, rows + i0] = 1.0
        dv[rows, rows + i0] = 0.0
        return float(np.sum(weights[i0:i1] * np.sum(dv / dx * weights[None, :], axis=1)))

    total = blocked_sum(n, block, workers=workers)
    if diag is not None:
        total += float(np.sum(diag))
    return total


def check_pole_resolution(curve: CurveSample, u: BoundaryFunction) -> None:
    if u.kind == "pole":
        d = distance_to_curve(curve, u.w)
        floor = RESOLUTION_FACTOR * curve.max_segment
        if d < floor:
            raise ResolutionError(f"pole at distance {d:.3g} < resolution floor {floor:.3g}")


def besov_power(curve: CurveSample, u: BoundaryFunction, p: float, workers=None) -> float:
    """``||u||_{B_p(Gamma)}^p``."""
    if p < 2:
        raise ValueError("only p >= 2 is supported")
    check_pole_resolution(curve, u)
    v = u.on_curve(curve)
    w = curve.weights()
    diag = None
    if p == 2:
        diag = np.abs(arclength_derivative(curve, v)) ** 2 * w * w
    return _pair_sum(curve.points, v, w, p, diag, workers) / FOUR_PI2


def besov_seminorm(curve: CurveSample, u: BoundaryFunction, p: float, workers=None) -> float:
    return besov_power(curve, u, p, workers) ** (1.0 / p)


def circle_pullback_power(curve: CurveSample, u: BoundaryFunction, p: float, workers=None) -> float:
    """``||u o z||_{B_p(S)}^p`` for the arc-length parametrization scaled to ``[0, 2pi)``.

    Uses the same samples and weights as :func:`besov_power`, only the kernel
    points move to ``exp(i t_j)``, so the two sums compare term by term.
    """
    if p < 2:
        raise ValueError("only p >= 2 is supported")
    check_pole_resolution(curve, u)
    k = 2.0 * math.pi / curve.length
    v = u.on_curve(curve)
    w = curve.weights() * k
    diag = None
    if p == 2:
        diag = np.abs(arclength_derivative(curve, v) / k) ** 2 * w * w
    pts = np.exp(1j * k * curve.arclength)
    return _pair_sum(pts, v, w, p, diag, workers) / FOUR_PI2


def pole_image_energy(curve: CurveSample, w: complex, p: float, workers=None) -> tuple[float, float]:
    """``iint_{G' x G'} |eta - xi|^(p-2) |d eta||d xi|`` on the image polyline
    ``eta_j = 1/(z_j - w)``; returns ``(energy, length(G'))``."""
    eta = 1.0 / (curve.points - complex(w))
    seg = np.abs(np.roll(eta, -1) - eta)
    wt = 0.5 * (seg + np.roll(seg, 1))
    n = len(eta)

    def block(i0, i1):
        d = np.abs(eta[i0:i1, None] - eta[None, :])
        if p == 2:
            k = np.ones_like(d)
        else:
            k = d ** (p - 2)
        return float(np.sum(wt[i0:i1] * np.sum(k * wt[None, :], axis=1)))

    return blocked_sum(n, block, workers=workers), float(seg.sum())


# --------------------------------------------------------------------------
# Dirichlet energies


@dataclass
class Quadrature:
    n_trunc: int = 256
    radial_order: int = 64
    angular_order: int = 512
    n_boundary: int | None = None
    radial_panels: int = 1

    def boundary_count(self) -> int:
        return self.n_boundary or max(1024, 4 * self.n_trunc)


def _disk_energy(m: ConformalMap, u: BoundaryFunction, p: float, quad: Quadrature) -> float:
    M = quad.boundary_count()
    theta = 2.0 * math.pi * np.arange(M) / M
    pts, params = m.boundary_on_source(theta)
    g = u.evaluate(pts, params)
    U = analyze_boundary(g, quad.n_trunc)
    return disk_dirichlet_energy(U, p, quad.radial_order, quad.angular_order, quad.radial_panels)


def _same_curve(a: CurveSample, b: CurveSample) -> bool:
    return a is b or (a.n == b.n and np.array_equal(a.points, b.points))


def interior_power(curve, m: ConformalMap, u, p, quad: Quadrature | None = None) -> float:
    quad = quad or Quadrature()
    if m.side != "interior":
        raise MapError("interior seminorm needs an interior map")
    if not _same_curve(m.source, curve):
        raise MapError("map was fitted to a different curve")
    return _disk_energy(m, u, p, quad)


def interior_seminorm(curve, m, u, p, quad: Quadrature | None = None) -> float:
    """``||u||_i`` = (p-energy of ``P(u o phi)`` on the disk)^(1/p)."""
    return interior_power(curve, m, u, p, quad) ** (1.0 / p)


def exterior_power(curve, m: ConformalMap, u, p, quad: Quadrature | None = None) -> float:
    quad = quad or Quadrature()
    if m.side != "exterior_reflected":
        raise MapError("exterior seminorm needs a reflected exterior map")
    if not _same_curve(m.source, curve):
        raise MapError("map was fitted to a different curve")
    if not contains_interior(curve, m.shift):
        raise MapError("reflection center is not inside the curve")
    return _disk_energy(m, u, p, quad)


def exterior_seminorm(curve, m, u, p, quad: Quadrature | None = None) -> float:
    """``||u||_e`` through ``u o iota o phi_tilde`` on the disk."""
    return exterior_power(curve, m, u, p, quad) ** (1.0 / p)


# --------------------------------------------------------------------------


@dataclass
class SeminormReport:
    p: float
    function: str
    besov: float
    interior: float
    exterior: float | None
    ratio_besov_interior: float | None
    ratio_exterior_interior: float | None
    n: int
    quadrature: dict = field(default_factory=dict)
    engine_interior: str = ""
    engine_exterior: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def _ratio(a, b):
    if a is None or b is None or b <= 0:
        return None
    return a / b


def fit_maps(curve: CurveSample, engine: str = "auto", exterior: bool = True):
    mi = fit_map(curve, "interior", engine)
    me = fit_map(curve, "exterior_reflected", engine) if exterior else None
    return mi, me


def seminorm_triple(curve: CurveSample, u: BoundaryFunction, p: float, engine: str = "auto",
                    quad: Quadrature | None = None, maps=None, exterior: bool = True,
                    workers=None) -> SeminormReport:
    quad = quad or Quadrature()
    mi, me = maps if maps is not None else fit_maps(curve, engine, exterior)
    b = besov_seminorm(curve, u, p, workers)
    i = interior_seminorm(curve, mi, u, p, quad)
    e = exterior_seminorm(curve, me, u, p, quad) if (exterior and me is not None) else None
    return SeminormReport(
        p=p, function=u.name, besov=b, interior=i, exterior=e,
        ratio_besov_interior=_ratio(b, i), ratio_exterior_interior=_ratio(e, i),
        n=curve.n, quadrature=asdict(quad), engine_interior=mi.engine,
        engine_exterior=me.engine if me is not None else "",
    )
