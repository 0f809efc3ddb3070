"""Boundary-layer functions for the three-point condition y(a) = y(gamma) = y(b).

With ``s = sqrt(m/eps)``, ``X = b - a``, ``Y = b - gamma``, ``Z = gamma - a``:

    D      = 2 (sinh sX - sinh sY - sinh sZ) = 8 sinh(sX/2) sinh(sY/2) sinh(sZ/2)
    zeta   = A/D * (e^{s(b-t)} - e^{s(t-b)} + e^{s(t-g)} - e^{s(g-t)})
           = A cosh(s(b+g-2t)/2) / (2 sinh(sX/2) sinh(sZ/2))
    zeta^  = B/D * (e^{s(t-a)} - e^{s(a-t)} + e^{s(g-t)} - e^{s(t-g)})
           = B cosh(s(2t-a-g)/2) / (2 sinh(sX/2) sinh(sY/2))
    psi    = lam |A| t / (D sqrt(m eps)) * 2 (cosh s(b-t) - cosh s(t-g))
           = lam |A| t sinh(s(b+g-2t)/2) / (2 sqrt(m eps) sinh(sX/2) sinh(sZ/2))

The product forms have no cancellation and are evaluated with every
exponential shifted by its largest exponent, so nothing overflows for
``eps`` down to 1e-14 and below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ENVELOPE_K = 4.0


def _shifted_cosh(x):
    """``cosh(x) * e^{-|x|}``."""
    ax = np.abs(x)
    return 0.5 * (1.0 + np.exp(-2.0 * ax))


def _shifted_sinh(x):
    """``sinh(x) * e^{-|x|}`` (odd in x)."""
    ax = np.abs(x)
    return -0.5 * np.sign(x) * np.expm1(-2.0 * ax)


def _shifted_sinh_pos(x: float) -> float:
    """``sinh(x) * e^{-x}`` for ``x > 0``."""
    return -0.5 * math.expm1(-2.0 * x)


@dataclass(frozen=True)
class LayerFamily:
    """Precomputed geometry and scale for one (m, eps, eta) configuration.

    ``A = eta(gamma) - eta(a)`` (signed) and ``B = |eta(b) - eta(gamma)|``.
    """

    a: float
    gamma: float
    b: float
    m: float
    epsilon: float
    A: float
    B: float

    def __post_init__(self):
        if not (self.a < self.gamma < self.b):
            raise ValueError("need a < gamma < b")
        if not (self.m > 0 and self.epsilon > 0):
            raise ValueError("m and epsilon must be positive")
        if self.B < 0:
            raise ValueError("B is an absolute value and must be >= 0")

    @property
    def s(self) -> float:
        return math.sqrt(self.m / self.epsilon)

    @property
    def X(self) -> float:
        return self.b - self.a

    @property
    def Y(self) -> float:
        return self.b - self.gamma

    @property
    def Z(self) -> float:
        return self.gamma - self.a

    # Normalised shapes: zeta = A * _zeta_shape, zeta_hat = B * _hat_shape.
    # Each is (shifted numerator) * exp(s * exponent) / (shifted denominator).
    def _zeta_parts(self, t):
        s = self.s
        c = 0.5 * (self.b + self.gamma - 2.0 * np.asarray(t, dtype=float))
        den = 2.0 * _shifted_sinh_pos(0.5 * s * self.X) * _shifted_sinh_pos(0.5 * s * self.Z)
        # |c| - (X+Z)/2 written without cancellation: exact 0 at a, -Z at gamma and b
        t = np.asarray(t, dtype=float)
        expo = s * np.where(c >= 0, self.a - t, (t - self.b) - self.Z)
        return c, den, expo

    def _hat_parts(self, t):
        s = self.s
        c = 0.5 * (2.0 * np.asarray(t, dtype=float) - self.a - self.gamma)
        den = 2.0 * _shifted_sinh_pos(0.5 * s * self.X) * _shifted_sinh_pos(0.5 * s * self.Y)
        t = np.asarray(t, dtype=float)
        expo = s * np.where(c >= 0, t - self.b, (self.a - t) - self.Y)
        return c, den, expo

    def zeta_shape(self, t, order: int = 0):
        """``d^order/dt^order zeta(t) / A``."""
        c, den, expo = self._zeta_parts(t)
        s = self.s
        # d/dt acts on cosh(s*c) with dc/dt = -1
        if order % 2 == 0:
            core = _shifted_cosh(s * c)
        else:
            core = -_shifted_sinh(s * c)
        return s**order * core * np.exp(expo) / den

    def hat_shape(self, t, order: int = 0):
        """``d^order/dt^order zeta_hat(t) / B``."""
        c, den, expo = self._hat_parts(t)
        s = self.s
        core = _shifted_cosh(s * c) if order % 2 == 0 else _shifted_sinh(s * c)
        return s**order * core * np.exp(expo) / den

    def psi_shape(self, t, lam: float):
        """``psi(t) / |A|``."""
        t = np.asarray(t, dtype=float)
        c, den, expo = self._zeta_parts(t)
        pref = lam / math.sqrt(self.m * self.epsilon)
        return pref * t * _shifted_sinh(self.s * c) * np.exp(expo) / den


def layer_family(a: float, gamma: float, b: float, m: float, epsilon: float,
                 eta_a: float, eta_gamma: float, eta_b: float) -> LayerFamily:
    return LayerFamily(a, gamma, b, m, epsilon, eta_gamma - eta_a, abs(eta_b - eta_gamma))


def big_d(fam: LayerFamily) -> tuple[float, float]:
    """Return ``(D, D * exp(-s X))``.

    The raw value overflows to ``inf`` for large ``s``; the scaled value is
    always finite and tends to 1 as ``s`` grows.
    """
    s = fam.s
    scaled = 8.0 * (_shifted_sinh_pos(0.5 * s * fam.X) * _shifted_sinh_pos(0.5 * s * fam.Y)
                    * _shifted_sinh_pos(0.5 * s * fam.Z))
    # the three half-exponents add up to exactly sX
    try:
        raw = scaled * math.exp(s * fam.X)
    except OverflowError:
        raw = math.inf
    return raw, scaled


def zeta(fam: LayerFamily, t, order: int = 0):
    """Left layer function (or its ``order``-th derivative)."""
    return fam.A * fam.zeta_shape(t, order)


def zeta_hat(fam: LayerFamily, t, order: int = 0):
    """Right layer function (or its ``order``-th derivative)."""
    return fam.B * fam.hat_shape(t, order)


def psi(fam: LayerFamily, lam: float, t):
    return abs(fam.A) * fam.psi_shape(t, lam)


def v_corr(fam: LayerFamily, lam: float, t):
    """Correction ``v = -(psi(a)-psi(g))/A zeta + (psi(g)-psi(b))/B zeta_hat + psi``.

    The quotients ``zeta/A`` and ``zeta_hat/B`` are taken as the normalised
    shapes, which is also the continuous extension at ``A = 0`` or ``B = 0``.
    When ``a != 0`` the end values are exponentially small differences of
    O(|a|/sqrt(eps)) terms, so they are accurate relative to ``|psi(a)|``,
    not relative to themselves.
    """
    ends = fam.psi_shape(np.array([fam.a, fam.gamma, fam.b]), lam) * abs(fam.A)
    pa, pg, pb = (float(x) for x in ends)
    return (-(pa - pg) * fam.zeta_shape(t) + (pg - pb) * fam.hat_shape(t)
            + psi(fam, lam, t))


def chi(fam: LayerFamily, t):
    """Decay exponent of ``zeta``: ``a - t`` left of ``(b+g)/2``, ``t - b + a - g`` after."""
    t = np.asarray(t, dtype=float)
    mid = 0.5 * (fam.b + fam.gamma)
    return np.where(t <= mid, fam.a - t, t - fam.b + fam.a - fam.gamma)


def chi_hat(fam: LayerFamily, t):
    """Decay exponent of ``zeta_hat``: ``t - b`` right of ``(a+g)/2``, ``g - b + a - t`` before."""
    t = np.asarray(t, dtype=float)
    mid = 0.5 * (fam.a + fam.gamma)
    return np.where(t >= mid, t - fam.b, fam.gamma - fam.b + fam.a - t)


def decay_bound(fam: LayerFamily, t, K: float = ENVELOPE_K):
    """Envelopes ``K|A| e^{s chi(t)}`` and ``K B e^{s chi_hat(t)}``.

    ``K = 4`` dominates the O(1) factors once ``s * min(b-g, g-a) >= 1.5``.
    """
    s = fam.s
    return (K * abs(fam.A) * np.exp(s * chi(fam, t)),
            K * fam.B * np.exp(s * chi_hat(fam, t)))
