"""Digamma and trigamma kernels on the line z = 1/2 + i*v.

The TLS frequency-pull formula needs Psi(1/2 + i*v) and its derivative for
real v.  This line is pole-free, so the classic recipe applies without any
special casing: push |z| above a threshold with the upward recurrences

    Psi(z+1)  = Psi(z)  + 1/z
    Psi'(z+1) = Psi'(z) - 1/z^2

then evaluate the Stirling-type asymptotic series with Bernoulli terms
through B12.  At |z| >= 12 the first neglected term is below 1e-16
relative, comfortably inside the 1e-12 / 1e-10 accuracy contracts.

Conjugate symmetry Psi(conj z) = conj Psi(z) is enforced exactly by
evaluating at |v| and flipping the imaginary sign.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

_RECURRENCE_RADIUS = 12.0

# B_{2k}/(2k) for k = 1..6: coefficients of z^{-2k} in the digamma series
_DIGAMMA_COEFFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
)

# B_{2k} for k = 1..6: coefficients of z^{-(2k+1)} in the trigamma series
_TRIGAMMA_COEFFS = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
)


@dataclass(frozen=True)
class DigammaEval:
    """Psi(1/2 + i*v) split into real and imaginary parts."""

    re_psi: float
    im_psi: float

    @property
    def value(self) -> complex:
        return complex(self.re_psi, self.im_psi)


def _digamma_asymptotic(z: complex) -> complex:
    # Psi(z) ~ ln z - 1/(2z) - sum_k B_2k / (2k z^{2k}), valid |z| >= 12
    inv2 = 1.0 / (z * z)
    total = 0.0 + 0.0j
    power = inv2
    for c in _DIGAMMA_COEFFS:
        total += c * power
        power *= inv2
    return cmath.log(z) - 0.5 / z - total


def _trigamma_asymptotic(z: complex) -> complex:
    # Psi'(z) ~ 1/z + 1/(2z^2) + sum_k B_2k / z^{2k+1}
    inv = 1.0 / z
    inv2 = inv * inv
    total = 0.0 + 0.0j
    power = inv * inv2
    for c in _TRIGAMMA_COEFFS:
        total += c * power
        power *= inv2
    return inv + 0.5 * inv2 + total


def digamma_at(z: complex) -> complex:
    """Psi(z) for Re z >= 1/2 (recurrence + asymptotic series)."""
    if z.real < 0.5:
        raise ValueError("digamma_at requires Re z >= 1/2")
    shift = 0.0 + 0.0j
    while abs(z) < _RECURRENCE_RADIUS:
        shift -= 1.0 / z
        z += 1.0
    return _digamma_asymptotic(z) + shift


def trigamma_at(z: complex) -> complex:
    """Psi'(z) for Re z >= 1/2 (recurrence + asymptotic series)."""
    if z.real < 0.5:
        raise ValueError("trigamma_at requires Re z >= 1/2")
    shift = 0.0 + 0.0j
    while abs(z) < _RECURRENCE_RADIUS:
        shift += 1.0 / (z * z)
        z += 1.0
    return _trigamma_asymptotic(z) + shift


def digamma_half_line(v: float) -> DigammaEval:
    """Psi(1/2 + i*v) for real v, accurate to ~1e-13 relative."""
    if not math.isfinite(v):
        raise ValueError("v must be finite")
    if v == 0.0:
        psi = digamma_at(0.5 + 0.0j)
        return DigammaEval(psi.real, 0.0)
    psi = digamma_at(complex(0.5, abs(v)))
    if v > 0:
        return DigammaEval(psi.real, psi.imag)
    return DigammaEval(psi.real, -psi.imag)


def trigamma_half_line(v: float) -> complex:
    """Psi'(1/2 + i*v) for real v, accurate to ~1e-12 relative."""
    if not math.isfinite(v):
        raise ValueError("v must be finite")
    if v == 0.0:
        val = trigamma_at(0.5 + 0.0j)
        return complex(val.real, 0.0)
    val = trigamma_at(complex(0.5, abs(v)))
    if v > 0:
        return val
    return val.conjugate()
