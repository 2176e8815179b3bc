"""Time-domain dynamics of the coupled bath-temperature / phonon-number
system in the fast-cavity (adiabatic field) limit.

    c_th dT/dt = h f_r0 kappa_i(T, n) n - (G0/(gt T0^(gt-1))) (T^gt - T0^gt)
    dn/dt      = -kappa(T, n) (n - nbar(T, n)),        gt = gamma + 1

with the quasi-stationary drive-fed phonon number

    nbar(T, n) = kappa_e / (Delta(T)^2 + (kappa/2)^2) * P_s / (hbar w_r0).

Rates and energy normalizations use the zero-temperature frequency f_r0
(shifts enter only through the detuning Delta), matching the steady-state
solver so that long-time endpoints coincide with its fixed points.

Also provides the frequency-stepped swept response with an IF low-pass
readout filter and the slow-cavity complex-Kerr reduction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .params import (
    BOLTZMANN_K,
    DiscreteTlsParams,
    DriveCondition,
    HBAR,
    OperatingPoint,
    PLANCK_H,
    ResonatorParams,
    SolverError,
    SweepResult,
    ThermalParams,
    TlsEnsembleParams,
)
from .thermal import default_heat_capacity, g_th
from .tls_response import delta_fr, q_i_inv
from .steady_solver import discrete_tls_shift

IF_FILTER_ORDER_FACTOR = 2.0   # tau_IF = k / bandwidth


@dataclass(frozen=True)
class KerrReduction:
    """Slow-cavity linearization: complex detuning and Kerr constant."""

    delta_tilde: complex   # rad/s, Delta_0 - i kappa_i/2
    kerr_k: complex        # rad/s per phonon


@dataclass
class Trajectory:
    t: np.ndarray
    temperature: np.ndarray
    n_phonons: np.ndarray
    s11: np.ndarray

    def endpoint(self) -> tuple[float, float]:
        return float(self.temperature[-1]), float(self.n_phonons[-1])


class _RateModel:
    """Shared rate bookkeeping bound to one parameter set."""

    def __init__(self, p: ResonatorParams, t: TlsEnsembleParams,
                 th: ThermalParams, dt: DiscreteTlsParams | None = None):
        self.p = p
        self.t = t
        self.th = th
        self.dt = dt
        self.omega0 = p.omega_r0
        self.kappa_e = self.omega0 / p.q_e
        gt = th.gamma + 1.0
        self.gt = gt
        self.cool_coeff = g_th(th) / (gt * th.t0 ** (gt - 1.0))
        self.c_th = th.c_th if th.c_th is not None else \
            default_heat_capacity(th)

    def omega_r(self, T: float, n: float) -> float:
        f_r = self.p.f_r0 + delta_fr(T, self.p, self.t)
        if self.dt is not None:
            f_r += discrete_tls_shift(n, T, f_r, self.dt) / (2.0 * math.pi)
        return 2.0 * math.pi * f_r

    def kappa_i(self, T: float, n: float) -> float:
        return self.omega0 * q_i_inv(T, n, self.p, self.t)

    def rates(self, omega_probe: float, p_s: float, T: float, n: float
              ) -> tuple[float, float, float, float]:
        """(Delta, kappa, kappa_i, nbar) at the instantaneous state.

        The detuning is expressed as omega0 times the fractional detuning
        x = (w - w_r)/w_r, the same normalization the steady-state
        reflection formula uses, so both solvers share identical fixed
        points (the difference is second order in the fractional shift).
        """
        T = max(T, 1e-6)
        n = max(n, 0.0)
        ki = self.kappa_i(T, n)
        kappa = ki + self.kappa_e
        omega_r = self.omega_r(T, n)
        delta = self.omega0 * (omega_probe - omega_r) / omega_r
        nbar = self.kappa_e / (delta * delta + 0.25 * kappa * kappa) \
            * p_s / (HBAR * self.omega0)
        return delta, kappa, ki, nbar

    def s11(self, delta: float, kappa: float) -> complex:
        return 1.0 - self.kappa_e / (1.0j * delta + 0.5 * kappa)


def integrate_tn(initial: tuple[float, float], drive: DriveCondition,
                 p: ResonatorParams, t: TlsEnsembleParams, th: ThermalParams,
                 t_end: float, dt: DiscreteTlsParams | None = None,
                 rtol: float = 1e-8, atol_t: float | None = None,
                 atol_n: float = 1e-6, n_samples: int = 400) -> Trajectory:
    """Integrate the coupled (T, n) equations from ``initial`` = (T0, n0).

    Uses an adaptive embedded Runge-Kutta 4(5) scheme at the given relative
    tolerance; raises SolverError on step-size failure.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    model = _RateModel(p, t, th, dt)
    omega_probe = 2.0 * math.pi * drive.f_probe
    p_s = drive.p_s
    atol_t = atol_t if atol_t is not None else 1e-12 * th.t0

    def rhs(_, state):
        T, n = state
        delta, kappa, ki, nbar = model.rates(omega_probe, p_s, T, n)
        heat = PLANCK_H * p.f_r0 * ki * max(n, 0.0)
        cool = model.cool_coeff * (max(T, 1e-12) ** model.gt
                                   - th.t0 ** model.gt)
        return [(heat - cool) / model.c_th, -kappa * (n - nbar)]

    sol = solve_ivp(rhs, (0.0, t_end), [initial[0], initial[1]],
                    method="RK45", rtol=rtol, atol=[atol_t, atol_n],
                    dense_output=True)
    if not sol.success:
        raise SolverError(f"time integration failed: {sol.message}")
    ts = np.linspace(0.0, t_end, n_samples)
    states = sol.sol(ts)
    temps = states[0]
    ns = np.maximum(states[1], 0.0)
    s11 = np.empty(len(ts), dtype=complex)
    for i, (T, n) in enumerate(zip(temps, ns)):
        delta, kappa, _, _ = model.rates(omega_probe, p_s, T, n)
        s11[i] = model.s11(delta, kappa)
    return Trajectory(t=ts, temperature=temps, n_phonons=ns, s11=s11)


def if_time_constant(bandwidth: float,
                     k: float = IF_FILTER_ORDER_FACTOR) -> float:
    """Readout low-pass settling time tau_IF = k / bandwidth."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    return k / bandwidth


def if_settling_q_limit(f_r: float, bandwidth: float, k: float = 1.0) -> float:
    """Largest quality factor whose ring-up still settles within the IF
    filter time, k pi f_r / bandwidth."""
    return k * math.pi * f_r / bandwidth


_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _if_filtered(traj: Trajectory, tau_if: float) -> complex:
    """Exponential-kernel average of S11(t) weighted toward the end of the
    dwell, normalized over the dwell window."""
    w = np.exp(-(traj.t[-1] - traj.t) / tau_if)
    norm = _trapezoid(w, traj.t)
    re = _trapezoid(w * traj.s11.real, traj.t) / norm
    im = _trapezoid(w * traj.s11.imag, traj.t) / norm
    return complex(re, im)


def swept_response_dynamic(grid, drive: DriveCondition, p: ResonatorParams,
                           t: TlsEnsembleParams, th: ThermalParams,
                           t_meas: float, if_bandwidth: float | None = None,
                           dt: DiscreteTlsParams | None = None,
                           k_filter: float = IF_FILTER_ORDER_FACTOR,
                           rtol: float = 1e-8,
                           enforce_far_start: bool = True) -> SweepResult:
    """Frequency-stepped response from explicit time integration.

    Each grid point integrates for ``t_meas`` with initial conditions
    carried over from the previous point (hysteresis follows naturally).
    With ``if_bandwidth`` set, the emitted S11 is the exponentially
    weighted dwell average mimicking the receiver low-pass.
    """
    grid = list(grid)
    if len(grid) < 2:
        raise ValueError("grid needs at least two points")
    model = _RateModel(p, t, th, dt)
    f_cold = model.omega_r(th.t0, 0.0) / (2.0 * math.pi)
    q_cold_inv = q_i_inv(th.t0, 0.0, p, t) + 1.0 / p.q_e
    if enforce_far_start:
        y_first = (grid[0] - f_cold) / f_cold / q_cold_inv
        if abs(y_first) < 20.0:
            raise ValueError("first grid point must be >= 20 linewidths "
                             "from the cold resonance")
    tau_if = if_time_constant(if_bandwidth, k_filter) \
        if if_bandwidth is not None else None
    state = (th.t0, 0.0)
    points: list[OperatingPoint] = []
    for f in grid:
        traj = integrate_tn(state, DriveCondition(f_probe=f, p_s=drive.p_s,
                                                  direction=drive.direction),
                            p, t, th, t_end=t_meas, dt=dt, rtol=rtol)
        T_end, n_end = traj.endpoint()
        state = (T_end, n_end)
        s11 = _if_filtered(traj, tau_if) if tau_if is not None \
            else complex(traj.s11[-1])
        delta, kappa, ki, _ = model.rates(2.0 * math.pi * f, drive.p_s,
                                          T_end, n_end)
        q_total = model.omega0 / kappa
        q_i = model.omega0 / ki
        x = delta / model.omega0
        f_r = f / (1.0 + x)
        p_d = PLANCK_H * p.f_r0 * ki * n_end
        points.append(OperatingPoint(
            temperature=T_end, nbar=n_end, q_i=q_i, q_total=q_total,
            f_r=f_r, x_detuning=x, y_fractional=q_total * x, s11=s11,
            p_d=p_d, alpha_sat=float("nan"), iterations=0, converged=True))
    from .steady_solver import detect_jumps
    result = SweepResult(points=points, direction=drive.direction,
                         p_s=drive.p_s)
    result.jump_indices = detect_jumps([pt.y_fractional for pt in points])
    return result


def kerr_reduction(T0: float, drive: DriveCondition, p: ResonatorParams,
                   t: TlsEnsembleParams, th: ThermalParams,
                   rel_step: float = 1e-4,
                   nbar_check: float | None = None) -> KerrReduction:
    """Slow-cavity linearization around the bath temperature.

    The complex detuning is Delta_tilde = Delta_0 - i kappa_i(T0)/2 and the
    Kerr constant per phonon

        K = (dDelta/dT - i (dkappa_i/dT)/2) * h f_r0 kappa_i(T0) / G_th(T0)

    with both temperature derivatives taken by central finite differences.
    Loss reduction on heating (TLS saturation regime) gives Im K > 0, i.e.
    negative two-phonon loss.  When ``nbar_check`` is given, warns if the
    linearized internal loss would turn negative at that occupancy.
    """
    if not (T0 > 0):
        raise ValueError("T0 must be positive")
    model = _RateModel(p, t, th)
    omega_probe = 2.0 * math.pi * drive.f_probe
    h = rel_step * T0

    def at(Tv: float) -> tuple[float, float]:
        return (omega_probe - model.omega_r(Tv, 0.0),
                model.kappa_i(Tv, 0.0))

    delta0, kappa_i0 = at(T0)
    d_hi, k_hi = at(T0 + h)
    d_lo, k_lo = at(T0 - h)
    ddelta_dt = (d_hi - d_lo) / (2.0 * h)
    dkappa_dt = (k_hi - k_lo) / (2.0 * h)
    # temperature rise per phonon, K: dT = h f_r0 kappa_i n / G_th
    coeff = PLANCK_H * p.f_r0 * kappa_i0 / g_th(th)
    kerr = (ddelta_dt - 0.5j * dkappa_dt) * coeff
    if nbar_check is not None:
        if kappa_i0 + dkappa_dt * coeff * nbar_check < 0.0:
            warnings.warn(
                "linearized internal loss becomes negative at the requested "
                "occupancy; the Kerr reduction is outside its validity range",
                stacklevel=2)
    return KerrReduction(delta_tilde=complex(delta0, -0.5 * kappa_i0),
                         kerr_k=kerr)


def kerr_steady_occupancy(red: KerrReduction, kappa_e: float, p_s: float,
                          omega0: float) -> float:
    """Smallest steady phonon number of the Kerr equation,
    n |Delta_tilde + K n - i kappa_e/2 ... | style balance.

    The full loss includes the external channel: the field equation
    da/dt = -i(Delta_tilde + K n) a - (kappa_e/2) a + sqrt(kappa_e) a_in
    gives at steady state n |i(Delta_0 + Re K n) + (kappa_i - 2 Im K n
    + kappa_e)/2|^2 = kappa_e P_s / (hbar omega0)."""
    drive_flux = kappa_e * p_s / (HBAR * omega0)
    delta0 = red.delta_tilde.real
    kappa_i0 = -2.0 * red.delta_tilde.imag

    def balance(n: float) -> float:
        det = delta0 + red.kerr_k.real * n
        loss = 0.5 * (kappa_i0 + kappa_e) - red.kerr_k.imag * n
        return n * (det * det + loss * loss) - drive_flux

    # bracket from the linear estimate
    n_lin = drive_flux / (delta0 ** 2 + 0.25 * (kappa_i0 + kappa_e) ** 2)
    lo, hi = 0.0, max(4.0 * n_lin, 1e-9)
    for _ in range(200):
        if balance(hi) > 0:
            break
        hi *= 2.0
    from scipy.optimize import brentq
    return brentq(balance, lo, hi, xtol=1e-30, rtol=1e-14)
