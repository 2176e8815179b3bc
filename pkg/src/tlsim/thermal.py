"""Power-to-temperature models.

* power-law conductance steady state T(P_d) and its exact inverse,
* heating phonon-number scale n_h,
* three-node lumped thermal network dynamics,
* ballistic (Landauer) conductance of a rectangular support beam with an
  optional hard phonon bandgap, and its local temperature exponent.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.integrate import quad

from .params import (
    BOLTZMANN_K,
    BeamGeometry,
    PLANCK_H,
    ResonatorParams,
    ThermalParams,
    ThreeNodeParams,
)


def g_quantum(T: float) -> float:
    """Universal quantum of thermal conductance, pi^2 k_B^2 T / (3 h), W/K."""
    if not (T > 0):
        raise ValueError("temperature must be positive")
    return math.pi ** 2 * BOLTZMANN_K ** 2 * T / (3.0 * PLANCK_H)


def g_th(th: ThermalParams, T: float | None = None) -> float:
    """Power-law conductance G_th(T) = n_ch g0(t0) (T/t0)^gamma, W/K."""
    base = th.n_ch * g_quantum(th.t0)
    if T is None or T == th.t0:
        return base
    return base * (T / th.t0) ** th.gamma


def t_of_pd(P_d: float, th: ThermalParams) -> float:
    """Steady-state temperature for dissipated power P_d.

    T = t0 * (1 + (1+gamma) P_d / (t0 G_th(t0)))^(1/(1+gamma)); reduces to
    Ohm's law T = t0 + P_d/G_th(t0) for small P_d.
    """
    if P_d < 0:
        raise ValueError(f"dissipated power must be >= 0, got {P_d!r}")
    gpow = 1.0 + th.gamma
    return th.t0 * (1.0 + gpow * P_d / (th.t0 * g_th(th))) ** (1.0 / gpow)


def pd_of_t(T: float, th: ThermalParams) -> float:
    """Exact inverse of :func:`t_of_pd`: the conductance integral from t0
    to T."""
    if not (T >= th.t0):
        raise ValueError("T must be >= bath temperature")
    gpow = 1.0 + th.gamma
    return g_th(th) * th.t0 / gpow * ((T / th.t0) ** gpow - 1.0)


def n_thermal(t0: float, f_r: float) -> float:
    """High-temperature thermal phonon number k_B t0 / (h f_r)."""
    return BOLTZMANN_K * t0 / (PLANCK_H * f_r)


def n_h(t0: float, q_i: float, p: ResonatorParams, th: ThermalParams) -> float:
    """Phonon-number scale for the onset of readout heating,
    pi n_ch q_i n_th^2 / (6 (gamma+1))."""
    if not (t0 > 0 and q_i > 0):
        raise ValueError("t0 and q_i must be positive")
    nth = n_thermal(t0, p.f_r0)
    return math.pi * th.n_ch * q_i * nth ** 2 / (6.0 * (th.gamma + 1.0))


def default_heat_capacity(th: ThermalParams, tau_th: float = 100e-6) -> float:
    """Heat capacity giving the requested thermal time constant
    tau_th = c_th / G_th(t0).  Used when ThermalParams.c_th is None."""
    return tau_th * g_th(th)


# ---------------------------------------------------------------------------
# three-node lumped network

def three_node_steady(tn: ThreeNodeParams, P_d: float) -> tuple[float, float]:
    """Steady-state (T_t, T_p) of the three-node network."""
    return ((tn.r_tp + tn.r_pb) * P_d + tn.t0, tn.r_pb * P_d + tn.t0)


def three_node_evolve(tn: ThreeNodeParams, P_d: float, t_span: float,
                      dt: float, T_t0: float | None = None,
                      T_p0: float | None = None) -> dict[str, np.ndarray]:
    """Integrate the two-node heat balance with fixed-step RK4.

        c_t dT_t/dt = P_d - (T_t - T_p)/r_tp
        c_p dT_p/dt = -(T_p - t0)/r_pb - (T_p - T_t)/r_tp

    Requires dt below a tenth of the fastest time constant.  Returns arrays
    keyed 't', 'T_t', 'T_p'.
    """
    tau_min = min(tn.tau_tp, tn.tau_pt, tn.tau_pb)
    if not (dt > 0 and dt <= tau_min / 10.0):
        raise ValueError(f"dt must be <= min(tau)/10 = {tau_min / 10.0:.3e} s")
    if P_d < 0:
        raise ValueError("P_d must be >= 0")

    def deriv(state: np.ndarray) -> np.ndarray:
        tt, tp = state
        dtt = (P_d - (tt - tp) / tn.r_tp) / tn.c_t
        dtp = (-(tp - tn.t0) / tn.r_pb - (tp - tt) / tn.r_tp) / tn.c_p
        return np.array([dtt, dtp])

    n_steps = int(math.ceil(t_span / dt))
    times = np.empty(n_steps + 1)
    traj = np.empty((n_steps + 1, 2))
    state = np.array([tn.t0 if T_t0 is None else T_t0,
                      tn.t0 if T_p0 is None else T_p0], dtype=float)
    times[0] = 0.0
    traj[0] = state
    t = 0.0
    for i in range(n_steps):
        h = min(dt, t_span - t)
        k1 = deriv(state)
        k2 = deriv(state + 0.5 * h * k1)
        k3 = deriv(state + 0.5 * h * k2)
        k4 = deriv(state + h * k3)
        state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        times[i + 1] = t
        traj[i + 1] = state
    return {"t": times, "T_t": traj[:, 0], "T_p": traj[:, 1]}


# ---------------------------------------------------------------------------
# Landauer beam conductance

def _band_cutoffs(geom: BeamGeometry, x_max: float, T: float,
                  lm_max: int | None) -> list[float]:
    """Reduced cutoffs x_lm = hbar omega_lm / (k_B T) of all bands that can
    contribute below the UV cutoff."""
    kT = BOLTZMANN_K * T
    hbar = PLANCK_H / (2.0 * math.pi)
    # omega_lm = pi c sqrt((l/w)^2 + (m/t)^2)
    pref = math.pi * geom.speed_c * hbar / kT
    l_lim = int(math.floor(x_max / pref * geom.width_w)) + 1
    m_lim = int(math.floor(x_max / pref * geom.thickness_t)) + 1
    if lm_max is not None:
        if l_lim > lm_max or m_lim > lm_max:
            warnings.warn(
                "band truncation at lm_max leaves thermally occupied bands "
                "out of the sum; increase lm_max or pass None",
                stacklevel=3)
        l_lim = min(l_lim, lm_max)
        m_lim = min(m_lim, lm_max)
    cutoffs = []
    for l in range(l_lim + 1):
        for m in range(m_lim + 1):
            x_lm = pref * math.hypot(l / geom.width_w, m / geom.thickness_t)
            if x_lm < x_max:
                cutoffs.append(x_lm)
    return cutoffs


def _planck_kernel(x: float) -> float:
    # x^2 e^x / (e^x - 1)^2, written overflow-safe; -> 1 as x -> 0
    if x < 1e-8:
        return 1.0 - x * x / 12.0
    half = 0.5 * x / math.sinh(0.5 * x)
    return half * half


def landauer_conductance(geom: BeamGeometry, T: float, x_max: float = 10.0,
                         lm_max: int | None = None,
                         mode_multiplicity: float = 1.0) -> float:
    """Ballistic thermal conductance of the support beams in W/K.

    Sums the Landauer integral (k_B^2 T / h) * int x^2 e^x/(e^x-1)^2 dx over
    all scalar bands whose reduced cutoff lies below ``x_max``, with unit
    transmissivity outside the bandgap window and zero inside.  The result
    is multiplied by ``n_beams`` and ``mode_multiplicity`` (ideal massless
    channels per scalar band).
    """
    if not (T > 0):
        raise ValueError("temperature must be positive")
    if x_max < 10.0:
        raise ValueError("x_max must be >= 10 for a converged integral")
    kT = BOLTZMANN_K * T
    gap = geom.gap_window()
    if gap is None:
        gap_x = None
    else:
        gap_x = (PLANCK_H * gap[0] / kT, PLANCK_H * gap[1] / kT)

    def band_integral(x_lo: float) -> float:
        pieces: list[tuple[float, float]] = [(x_lo, x_max)]
        if gap_x is not None:
            lo, hi = gap_x
            new_pieces = []
            for a, b in pieces:
                if hi <= a or lo >= b:
                    new_pieces.append((a, b))
                    continue
                if a < lo:
                    new_pieces.append((a, lo))
                if hi < b:
                    new_pieces.append((hi, b))
            pieces = new_pieces
        total = 0.0
        for a, b in pieces:
            if b <= a:
                continue
            val, _ = quad(_planck_kernel, a, b, epsabs=1e-14, epsrel=1e-10,
                          limit=200)
            total += val
        return total

    cutoffs = _band_cutoffs(geom, x_max, T, lm_max)
    total = sum(band_integral(x_lo) for x_lo in cutoffs)
    return (BOLTZMANN_K * kT / PLANCK_H) * total * geom.n_beams * mode_multiplicity


def gamma_exponent(geom: BeamGeometry, T: float, rel_step: float = 1e-3,
                   **kwargs) -> float:
    """Local temperature exponent gamma(T) = d ln G_th / d ln T by central
    differences with the given relative step."""
    g_hi = landauer_conductance(geom, T * (1.0 + rel_step), **kwargs)
    g_lo = landauer_conductance(geom, T * (1.0 - rel_step), **kwargs)
    return (math.log(g_hi) - math.log(g_lo)) / (
        math.log1p(rel_step) - math.log1p(-rel_step))


def crossover_temperature_1d(geom: BeamGeometry) -> float:
    """Temperature pi hbar c / (k_B w) above which the beam stops acting as
    a single-mode phonon waveguide."""
    hbar = PLANCK_H / (2.0 * math.pi)
    return math.pi * hbar * geom.speed_c / (BOLTZMANN_K * geom.width_w)
