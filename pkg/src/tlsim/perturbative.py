"""First-order nonlinear response models.

The reactive response linearized around the bath temperature obeys the
cubic detuning balance

    y = y0 + a / (1 + 4 y^2)      <=>      4y^3 - 4 y0 y^2 + y - (y0 + a) = 0

with nonlinearity strength a proportional to probe power.  Hysteresis
appears for |a| above a_c = 4/(3 sqrt 3).  The generalized (mixed
reactive-dissipative) variant replaces (y0, y) by rotated coordinates
(k0, k) controlled by a phase angle phi in [-pi/2, 0].
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .params import BOLTZMANN_K, HBAR, ResonatorParams, ThermalParams, TlsEnsembleParams
from .thermal import g_th, n_thermal
from .tls_response import half_quantum_ratio, q_i_inv, tcf

A_CRITICAL = 4.0 / (3.0 * math.sqrt(3.0))

REAL_ROOT_RTOL = 1e-10


@dataclass(frozen=True)
class SwensonProblem:
    """Applied fractional detuning and nonlinearity strength."""

    y0: float
    a: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.y0) and math.isfinite(self.a)):
            raise ValueError("y0 and a must be finite")


@dataclass(frozen=True)
class DuffingScales:
    """Temperature and phonon-number scales of the mixed nonlinearity.

    t_star = t_d / sqrt(1 + (t_d/t_r)^2) interpolates between the purely
    dissipative (t_d) and purely reactive (t_r) limits, and
    phi_nl = atan(t_d/t_r) - pi/2 is the response phase angle.
    """

    t_r: float       # K, reactive scale 1/TCF
    t_d: float       # K, dissipative scale
    t_star: float    # K
    n_star: float    # phonons
    phi_nl: float    # rad, in [-pi/2, 0]


def _cubic_coeffs(y0: float, a: float) -> tuple[float, float]:
    # depressed form t^3 + p t + q after y = t + y0/3
    p = 0.25 - y0 * y0 / 3.0
    q = -2.0 * y0 ** 3 / 27.0 - y0 / 6.0 - a / 4.0
    return p, q


def _polish_root(y0: float, a: float, y: complex) -> complex:
    # a couple of Newton steps on P(y) = 4y^3 - 4 y0 y^2 + y - (y0 + a)
    for _ in range(3):
        p_val = ((4.0 * y - 4.0 * y0) * y + 1.0) * y - (y0 + a)
        dp = (12.0 * y - 8.0 * y0) * y + 1.0
        if dp == 0:
            break
        step = p_val / dp
        y = y - step
        if abs(step) <= 1e-17 * max(1.0, abs(y)):
            break
    return y


def swenson_roots(prob: SwensonProblem) -> list[complex]:
    """The three roots of the detuning cubic, sorted by real part.

    Three-real-root configurations are evaluated with the trigonometric
    form of Cardano's method to avoid cancellation near the bifurcation
    threshold; every root is Newton-polished to residual
    <= 1e-12 * max(1, |y0|^3, |a|).
    """
    y0, a = prob.y0, prob.a
    p, q = _cubic_coeffs(y0, a)
    shift = y0 / 3.0
    disc = -4.0 * p ** 3 - 27.0 * q ** 2
    roots: list[complex]
    if disc > 0.0:
        # three distinct real roots: t_k = 2 sqrt(-p/3) cos(theta/3 - 2 pi k/3)
        r = math.sqrt(-p / 3.0)
        arg = 3.0 * q / (2.0 * p * r)
        arg = min(1.0, max(-1.0, arg))
        theta = math.acos(arg)
        roots = [complex(2.0 * r * math.cos(theta / 3.0 - 2.0 * math.pi * k / 3.0)
                         + shift, 0.0) for k in range(3)]
    else:
        # one real root via Cardano, complex pair from the quadratic factor
        half_q = -q / 2.0
        s = math.sqrt(max(0.0, (q * q / 4.0) + (p ** 3) / 27.0))
        u = math.copysign(abs(half_q + s) ** (1.0 / 3.0), half_q + s)
        v = math.copysign(abs(half_q - s) ** (1.0 / 3.0), half_q - s)
        y_real = _polish_root(y0, a, complex(u + v + shift, 0.0)).real
        # synthetic division of y^3 - y0 y^2 + y/4 - (y0+a)/4 by (y - y_real)
        b = y_real - y0
        c = 0.25 + y_real * b
        disc2 = b * b - 4.0 * c
        sq = cmath.sqrt(disc2)
        roots = [complex(y_real, 0.0), (-b + sq) / 2.0, (-b - sq) / 2.0]
    roots = [_polish_root(y0, a, y) for y in roots]
    roots.sort(key=lambda z: (z.real, z.imag))
    return roots


def is_real_root(y: complex) -> bool:
    return abs(y.imag) <= REAL_ROOT_RTOL * max(1.0, abs(y.real))


def real_roots(prob: SwensonProblem) -> list[float]:
    return [y.real for y in swenson_roots(prob) if is_real_root(y)]


def swenson_branch(y0_grid, a: float, direction: str = "up"
                   ) -> tuple[list[float], list[int]]:
    """Physical branch along a monotone sweep of the applied detuning.

    Continuation: at each grid point the real root nearest to the previous
    selection is kept; when that branch vanishes (real-root count drops)
    the system jumps to the surviving root and the grid index is recorded.

    Returns (y values, jump indices).
    """
    grid = list(y0_grid)
    if len(grid) >= 2:
        inc = grid[1] > grid[0]
        if direction == "up" and not inc:
            raise ValueError("up sweep requires an increasing grid")
        if direction == "down" and inc:
            raise ValueError("down sweep requires a decreasing grid")
        steps = [grid[i + 1] - grid[i] for i in range(len(grid) - 1)]
        if any((s > 0) != inc or s == 0 for s in steps):
            raise ValueError("grid must be strictly monotone")

    ys: list[float] = []
    jumps: list[int] = []
    prev: float | None = None
    prev_count = 0
    for i, y0 in enumerate(grid):
        reals = real_roots(SwensonProblem(y0, a))
        if not reals:
            # fully complex triple cannot occur for real coefficients
            raise ArithmeticError("cubic lost all real roots")
        if prev is None:
            # entering from outside the bistable window the root is unique;
            # otherwise start on the stable branch matching the direction
            if len(reals) == 1:
                pick = reals[0]
            else:
                pick = min(reals) if direction == "up" else max(reals)
        else:
            pick = min(reals, key=lambda r: abs(r - prev))
            if len(reals) < prev_count and len(reals) == 1:
                # previous branch may have folded away
                step = abs(grid[i] - grid[i - 1])
                if abs(pick - prev) > 10.0 * step + 1e-9:
                    jumps.append(i)
        ys.append(pick)
        prev = pick
        prev_count = len(reals)
    return ys, jumps


def _discriminant(y0: float, a: float) -> float:
    p, q = _cubic_coeffs(y0, a)
    return -4.0 * p ** 3 - 27.0 * q ** 2


def has_bistable_window(a: float) -> bool:
    """True when some applied detuning yields three real roots."""
    if abs(a) <= A_CRITICAL:
        return False
    return True


def swenson_fold_points(a: float) -> tuple[float, float]:
    """Exact edges (y0_lower, y0_upper) of the three-real-root window,
    located as the zeros of the cubic discriminant in y0.

    For a hardening sweep (a < 0) the window edges are the down-jump and
    up-jump detunings; requires |a| > a_c.
    """
    if abs(a) <= A_CRITICAL:
        raise ValueError("no bistable window for |a| <= a_c")
    if a > 0:
        lo, hi = swenson_fold_points(-a)
        return -hi, -lo
    # hardening: window sits at positive y0, between the asymptotic
    # estimates of the two jumps
    y0_dn = 3.0 * (-a) ** (1.0 / 3.0) / 2.0 ** (4.0 / 3.0)
    y0_up = -a - 1.0 / (16.0 * a)
    center = 0.5 * (y0_dn + y0_up)
    # the discriminant is positive inside the window
    lo = brentq(_discriminant, 0.0, center, args=(a,), xtol=1e-15, rtol=1e-15)
    hi = brentq(_discriminant, center, 4.0 * abs(a) + 4.0, args=(a,),
                xtol=1e-15, rtol=1e-15)
    return lo, hi


def jump_up_asymptote(a: float) -> float:
    """Series estimate of the up-sweep jump detuning, -a - 1/(16a) - 1/(256 a^3)."""
    if a >= 0:
        raise ValueError("up-jump asymptote applies to hardening a < 0")
    return -a - 1.0 / (16.0 * a) - 1.0 / (256.0 * a ** 3)


def jump_down_asymptote(a: float, n_terms: int = 4) -> float:
    """Series estimate of the down-sweep jump detuning,
    3(-a)^(1/3)/2^(4/3) - 1/(2^(8/3)(-a)^(1/3)) + 1/(48a) - 7/(864 2^(1/3) (-a)^(5/3))."""
    if a >= 0:
        raise ValueError("down-jump asymptote applies to hardening a < 0")
    m = -a
    terms = [3.0 * m ** (1.0 / 3.0) / 2.0 ** (4.0 / 3.0),
             -1.0 / (2.0 ** (8.0 / 3.0) * m ** (1.0 / 3.0)),
             1.0 / (48.0 * a),
             -7.0 / (864.0 * 2.0 ** (1.0 / 3.0) * m ** (5.0 / 3.0))]
    return sum(terms[:n_terms])


def critical_fractional_detuning() -> float:
    """Realized detuning magnitude |y| at which an on-resonance operating
    point (y0 = 0) sits exactly at the hysteresis threshold |a| = a_c.

    Root of y (1 + 4 y^2) = -a_c, i.e. 4 y^3 + y + a_c = 0; about -0.4367.
    """
    return brentq(lambda y: 4.0 * y ** 3 + y + A_CRITICAL, -1.0, 0.0,
                  xtol=1e-15, rtol=1e-15)


def swenson_a(T0: float, Q: float, Q_e: float, Q_i: float, P_s: float,
              r_th: float, tcf_value: float) -> float:
    """Reactive nonlinearity strength a = -r_th * TCF * (4 Q^3/(Q_e Q_i)) * P_s."""
    if min(Q, Q_e, Q_i) <= 0:
        raise ValueError("quality factors must be positive")
    return -r_th * tcf_value * 4.0 * Q ** 3 / (Q_e * Q_i) * P_s


def swenson_a_from_depth(T0: float, alpha_depth: float, Q_e: float,
                         P_s: float, r_th: float, tcf_value: float) -> float:
    """Equivalent depth parametrization a = -r_th*TCF*4 Q_e alpha^2 (1-alpha) P_s
    with alpha = Q/Q_e."""
    return -r_th * tcf_value * 4.0 * Q_e * alpha_depth ** 2 \
        * (1.0 - alpha_depth) * P_s


def duffing_scales(T0: float, p: ResonatorParams, t: TlsEnsembleParams,
                   th: ThermalParams) -> DuffingScales:
    """Temperature/phonon scales of the linearized mixed nonlinearity."""
    if not (T0 > 0):
        raise ValueError("T0 must be positive")
    eps = half_quantum_ratio(p.f_r0, T0)
    tanh_e = math.tanh(eps)
    sech2 = 1.0 - tanh_e * tanh_e
    r_th = 1.0 / g_th(ThermalParams(t0=T0, n_ch=th.n_ch, gamma=th.gamma))
    omega2 = p.omega_r0 ** 2
    t_d0 = 16.0 * t.n_s * r_th * (BOLTZMANN_K * T0) ** 2 * eps ** 2 \
        / (HBAR * tanh_e)
    if t.fd0_diss > 0:
        t_d1 = 2.0 * T0 / (t.fd0_diss * eps * sech2)
        t_d = 1.0 / (1.0 / t_d0 + 1.0 / t_d1)
    else:
        t_d = t_d0
    tcf0 = tcf(T0, p, t)
    if tcf0 == 0.0:
        t_r = math.inf
        t_star = 0.0 if t_d == 0.0 else t_d
        phi = 0.0
    else:
        t_r = 1.0 / tcf0
        t_star = t_d / math.sqrt(1.0 + (t_d / t_r) ** 2)
        phi = math.atan(t_d / t_r) - math.pi / 2.0
    q_i0 = 1.0 / q_i_inv(T0, 0.0, p, t)
    n_star = q_i0 * t_star / (HBAR * omega2 * r_th)
    return DuffingScales(t_r=t_r, t_d=t_d, t_star=t_star, n_star=n_star,
                         phi_nl=phi)


def duffing_a_star(T0: float, q_total: float, q_e: float, p_s: float,
                   p: ResonatorParams, scales: DuffingScales) -> float:
    """Power-normalized nonlinearity degree 4 Q^3 P_s / (hbar w_r^2 Q_e n_star)."""
    return 4.0 * q_total ** 3 * p_s / (HBAR * p.omega_r0 ** 2 * q_e
                                       * scales.n_star)


def bifurcation_factor(phi: float) -> float:
    """Threshold enhancement 1/(8 cos^3(pi/3 - phi)) of the mixed model;
    1 at phi = 0, divergent as phi -> -pi/6."""
    c = math.cos(math.pi / 3.0 - phi)
    if c <= 0.0:
        return math.inf
    return 1.0 / (8.0 * c ** 3)


def bifurcation_fd0_bound(T0: float, f_r: float, n_ch: float,
                          n_s: float) -> float:
    """Minimum reactive loss tangent for hysteresis to be reachable,
    (pi^2/(8 sqrt 3)) n_ch (n_th^2/n_s) tanh(1/(2 n_th))."""
    nth = n_thermal(T0, f_r)
    return math.pi ** 2 / (8.0 * math.sqrt(3.0)) * n_ch * nth ** 2 / n_s \
        * math.tanh(1.0 / (2.0 * nth))


def duffing_solve(y0: float, a_star: float, scales: DuffingScales,
                  q_total: float, q_e: float, direction: str = "up"
                  ) -> tuple[float, float, complex]:
    """Operating point of the generalized model at one applied detuning.

    Returns (k0, k, S11).  The rotated detuning balance
    k = k0 - a/(1+4k^2) with a = a_star/Re(z)^3, z = (1+2i y0) e^{-i phi},
    reuses the cubic solver through the sign map a -> -a.
    """
    phi = scales.phi_nl
    if not (-math.pi / 2 < phi <= 0.0):
        raise ValueError("phase angle must lie in (-pi/2, 0]")
    z = (1.0 + 2.0j * y0) * cmath.exp(-1.0j * phi)
    re_z = z.real
    k0 = z.imag / (2.0 * re_z)
    a = a_star / re_z ** 3
    reals = real_roots(SwensonProblem(k0, -a))
    if len(reals) == 1:
        k = reals[0]
    else:
        k = min(reals) if direction == "up" else max(reals)
    p_denom = (1.0 + 2.0j * k) * re_z * cmath.exp(1.0j * phi)
    s11 = 1.0 - 2.0 * q_total / (p_denom * q_e)
    return k0, k, s11


def delta_t_from_y(y: float, alpha_depth: float, p_s: float,
                   r_th: float) -> float:
    """Steady heating dT = 4 a (1-a) / (1 + 4y^2) * r_th * P_s at resonance
    depth a = Q/Q_e."""
    if not (0.0 <= alpha_depth <= 1.0):
        raise ValueError("alpha_depth must lie in [0, 1]")
    return 4.0 * alpha_depth * (1.0 - alpha_depth) / (1.0 + 4.0 * y * y) \
        * r_th * p_s


def s11_from_y(y: float, alpha_depth: float) -> complex:
    """Reflection 1 - 2 a/(1 + 2 j y) at resonance depth a = Q/Q_e."""
    if not (0.0 <= alpha_depth <= 1.0):
        raise ValueError("alpha_depth must lie in [0, 1]")
    return 1.0 - 2.0 * alpha_depth / (1.0 + 2.0j * y)
