"""Poisson extension and p-energies on the unit disk.

Boundary data on the circle are represented by truncated Fourier
coefficients. The Poisson extension, its Wirtinger derivatives and the
weighted disk energy are evaluated from those coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P

TWO_PI = 2.0 * math.pi


class HarmonicError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DiskHarmonic:
    """``U(r e^{it}) = sum_n a_n r^{|n|} e^{int}`` for ``|n| <= n_trunc``.

    ``coeffs[n_trunc + n]`` holds ``a_n``.
    """

    coeffs: np.ndarray
    n_trunc: int

    def a(self, n: int) -> complex:
        if abs(n) > self.n_trunc:
            return 0j
        return complex(self.coeffs[self.n_trunc + n])

    @property
    def positive(self) -> np.ndarray:
        """``a_0, a_1, ..., a_T``."""
        return self.coeffs[self.n_trunc:]

    @property
    def negative(self) -> np.ndarray:
        """``a_0, a_{-1}, ..., a_{-T}``."""
        return self.coeffs[self.n_trunc::-1]

    def scaled(self, c: complex) -> "DiskHarmonic":
        return DiskHarmonic(self.coeffs * c, self.n_trunc)


def analyze_boundary(samples, n_trunc: int) -> DiskHarmonic:
    """Discrete Fourier coefficients of samples at ``N`` uniform angles.

    Requires ``N >= 2*n_trunc + 1``; the only error is aliasing of the
    frequencies above ``n_trunc``.
    """
    g = np.asarray(samples, dtype=complex)
    n = g.size
    if n_trunc < 0 or n < 2 * n_trunc + 1:
        raise HarmonicError(f"{n} samples cannot resolve n_trunc={n_trunc}")
    c = np.fft.fft(g) / n
    neg = c[n - n_trunc:] if n_trunc else c[:0]
    coeffs = np.concatenate([neg, c[: n_trunc + 1]])
    return DiskHarmonic(coeffs, n_trunc)


def _check_inside(z):
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1):
        raise HarmonicError("evaluation point outside the open unit disk")
    return z


def eval_harmonic(U: DiskHarmonic, z):
    z = _check_inside(z)
    neg = U.negative.copy()
    neg[0] = 0.0
    return P.polyval(z, U.positive) + P.polyval(np.conj(z), neg)


def wirtinger_gradient(U: DiskHarmonic, z):
    """``(U_w, U_wbar)``: ``sum n a_n z^{n-1}`` and ``sum n a_{-n} zbar^{n-1}``."""
    z = _check_inside(z)
    n = np.arange(1, U.n_trunc + 1)
    uw = P.polyval(z, n * U.positive[1:]) if U.n_trunc else np.zeros_like(z)
    uwb = P.polyval(np.conj(z), n * U.negative[1:]) if U.n_trunc else np.zeros_like(z)
    return uw, uwb


@lru_cache(maxsize=32)
def radial_rule(order: int, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes on [0, 1], panels graded toward r = 1.

    Panel edges are ``0, 1/2, 3/4, ..., 1 - 2^-(panels-1), 1``.
    """
    if panels < 1 or order < panels:
        raise HarmonicError("radial order must be at least the number of panels")
    q = order // panels
    x, w = np.polynomial.legendre.leggauss(q)
    edges = np.concatenate([1.0 - 0.5 ** np.arange(panels), [1.0]])
    edges[0] = 0.0
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = 0.5 * (hi - lo)
        nodes.append(lo + h * (x + 1.0))
        weights.append(h * w)
    return np.concatenate(nodes), np.concatenate(weights)


def gradient_rings(U: DiskHarmonic, radii: np.ndarray, angular_order: int):
    """``|U_w|`` and ``|U_wbar|`` on rings ``r_j e^{2 pi i k / M}`` via FFT."""
    T = U.n_trunc
    M = angular_order
    if M < T:
        raise HarmonicError("angular order must be at least n_trunc")
    if T == 0:
        z = np.zeros((len(radii), M))
        return z, z
    n = np.arange(1, T + 1)
    powers = radii[:, None] ** (n - 1)[None, :]
    cp = np.zeros((len(radii), M), dtype=complex)
    cn = np.zeros((len(radii), M), dtype=complex)
    cp[:, :T] = powers * (n * U.positive[1:])[None, :]
    cn[:, :T] = powers * (n * U.negative[1:])[None, :]
    uw = M * np.fft.ifft(cp, axis=1)
    uwb = np.fft.fft(cn, axis=1)
    return np.abs(uw), np.abs(uwb)


def disk_dirichlet_energy(U: DiskHarmonic, p: float, radial_order: int = 64,
                          angular_order: int = 512, radial_panels: int = 1) -> float:
    """``(1/2pi) iint_D (|U_w| + |U_wbar|)^p (1 - |z|^2)^(p-2) dA``."""
    if p < 2:
        raise HarmonicError("p-energies are only supported for p >= 2")
    r, w = radial_rule(radial_order, radial_panels)
    a, b = gradient_rings(U, r, angular_order)
    ring_means = ((a + b) ** p).mean(axis=1)
    # (1/2pi) * int r dr * (2pi * mean over the ring)
    return float(np.sum(w * r * (1.0 - r * r) ** (p - 2) * ring_means))


def circle_derivative(samples) -> np.ndarray:
    """Centered difference ``dg/dtheta`` for uniform samples."""
    g = np.asarray(samples, dtype=complex)
    h = TWO_PI / g.size
    return (np.roll(g, -1) - np.roll(g, 1)) / (2 * h)


def circle_besov_seminorm(samples, p: float) -> float:
    """Besov seminorm of uniformly sampled circle data, double trapezoid.

    ``(1/4pi^2) iint |g(t) - g(s)|^p / |e^{it} - e^{is}|^2 dt ds``, p-th root.
    The diagonal carries its limit: ``|g'|^2`` for p = 2, zero for p > 2.
    """
    g = np.asarray(samples, dtype=complex)
    n = g.size
    if n < 16:
        raise HarmonicError("need at least 16 samples")
    if p < 2:
        raise HarmonicError("only p >= 2 is supported")
    h = TWO_PI / n
    total = 0.0
    # the kernel only depends on the index offset m
    for m in range(1, n):
        chord2 = 4.0 * math.sin(math.pi * m / n) ** 2
        total += float(np.sum(np.abs(g - np.roll(g, -m)) ** p)) / chord2
    if p == 2:
        total += float(np.sum(np.abs(circle_derivative(g)) ** 2))
    return (total * h * h / (4.0 * math.pi ** 2)) ** (1.0 / p)
