"""Non-perturbative self-consistent steady-state solver.

Two nested fixed-point loops find the operating point for one applied
readout tone:

* the inner saturation loop iterates alpha <- f(alpha) for the resonant-TLS
  saturation parameter at fixed temperature and detuning, giving the loaded
  quality factor Q = Q_min/(1 - r alpha);
* the outer detuning loop maps Q to dissipated power, the power to a bath
  temperature through the conductance model, the temperature to a shifted
  resonance (continuum pull plus optional discrete-TLS pull) and hence to a
  new realized detuning x.  The outer loop is Anderson-accelerated with a
  damped-mixing fallback and finished with a secant polish so that the
  energy-conservation identities hold to better than 1e-9 at the returned
  point.

Sweeps walk a frequency grid in order, warm-starting every point from the
previous converged temperature; this continuation is what selects the
hysteresis branch.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

from .params import (
    DcmParams,
    DiscreteTlsParams,
    DriveCondition,
    HBAR,
    OperatingPoint,
    ResonatorParams,
    SolverError,
    SweepDirection,
    SweepResult,
    ThermalParams,
    TlsEnsembleParams,
)
from .thermal import t_of_pd
from .tls_response import (
    delta_fr,
    half_quantum_ratio,
    q_i_inv,
    q_rel_inv,
    q_res_inv,
)

EPS_ALPHA = 1e-5
EPS_X = 1e-8
MAX_ALPHA_ITER = 10_000
MAX_X_ITER = 3000
ANDERSON_DEPTH = 5
ANDERSON_COND_LIMIT = 1e12
MIX_BETA = 0.3
FAR_DETUNED_LINEWIDTHS = 20.0


@dataclass(frozen=True)
class SolverSettings:
    eps_alpha: float = EPS_ALPHA
    eps_x: float = EPS_X
    max_alpha_iter: int = MAX_ALPHA_ITER
    max_x_iter: int = MAX_X_ITER
    accel: str = "anderson"          # "anderson" or "damped"
    mix_beta: float = MIX_BETA
    anderson_depth: int = ANDERSON_DEPTH
    polish: bool = True


class AndersonAccelerator:
    """Residual-history least-squares extrapolation for scalar or vector
    fixed-point iterations x <- g(x).

    Keeps the last ``depth`` (x, g(x)) pairs; each step solves the small
    least-squares problem on residual differences, dropping the oldest
    column while the system's condition number exceeds ``cond_limit``.
    """

    def __init__(self, depth: int = ANDERSON_DEPTH,
                 cond_limit: float = ANDERSON_COND_LIMIT):
        self.depth = depth
        self.cond_limit = cond_limit
        self._xs: list[np.ndarray] = []
        self._gs: list[np.ndarray] = []

    def reset(self) -> None:
        self._xs.clear()
        self._gs.clear()

    def step(self, x, gx):
        """Propose the next iterate from the pair (x, g(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        gx = np.atleast_1d(np.asarray(gx, dtype=float))
        self._xs.append(x)
        self._gs.append(gx)
        if len(self._xs) > self.depth + 1:
            self._xs.pop(0)
            self._gs.pop(0)
        if len(self._xs) < 2:
            return gx.copy()
        while True:
            m = len(self._xs) - 1
            fs = [g - x_ for x_, g in zip(self._xs, self._gs)]
            df = np.column_stack([fs[i + 1] - fs[i] for i in range(m)])
            sv = np.linalg.svd(df, compute_uv=False)
            cond = math.inf if sv[-1] == 0.0 else sv[0] / sv[-1]
            if cond <= self.cond_limit or m == 1:
                theta, *_ = np.linalg.lstsq(df, fs[-1], rcond=None)
                dg = np.column_stack([self._gs[i + 1] - self._gs[i]
                                      for i in range(m)])
                return self._gs[-1] - dg @ theta
            self._xs.pop(0)
            self._gs.pop(0)


# ---------------------------------------------------------------------------
# saturation (alpha) fixed point


def _alpha_map(alpha: float, r: float, beta: float, chi_pref: float,
               two_qmin_x: float, tanh_eps: float) -> float:
    """One application of the saturation map f(alpha)."""
    one = 1.0 - r * alpha
    chi_d = one * one / (one * one + two_qmin_x * two_qmin_x)
    denom = math.sqrt(one ** (2.0 * beta)
                      + (chi_d ** beta) * chi_pref * tanh_eps)
    return 1.0 - one ** beta / denom


def alpha_fixed_point(x: float, T: float, p: ResonatorParams,
                      t: TlsEnsembleParams, drive: DriveCondition,
                      settings: SolverSettings | None = None
                      ) -> tuple[float, float]:
    """Saturation parameter and loaded Q at fixed temperature and detuning.

    Iterates alpha <- f(alpha) from alpha = 1e-9 until successive values
    differ by <= eps_alpha (the map is monotone with a unique fixed point
    in [0, 1] for beta = 1), then polishes the root of alpha - f(alpha)
    with secant steps.  Raises SolverError after max_alpha_iter updates.
    """
    settings = settings or SolverSettings()
    q_e = p.q_e
    tanh_eps = math.tanh(half_quantum_ratio(p.f_r0, T))
    bkg = 0.0 if math.isinf(p.q_bkg) else 1.0 / p.q_bkg
    q_max_inv = 1.0 / q_e + bkg + q_rel_inv(T, t)
    q_min_inv = q_max_inv + t.fd0_diss * tanh_eps
    q_min = 1.0 / q_min_inv
    r = (1.0 / q_max_inv - q_min) * q_max_inv  # (q_max - q_min)/q_max
    xi = 4.0 * q_min ** 2 * drive.p_s / (q_e * HBAR * p.omega_r0 ** 2 * t.n_s)
    chi_pref = xi ** t.beta
    two_qmin_x = 2.0 * q_min * x

    def f(a: float) -> float:
        return _alpha_map(a, r, t.beta, chi_pref, two_qmin_x, tanh_eps)

    alpha = 1e-9
    ok = False
    for _ in range(settings.max_alpha_iter):
        nxt = f(alpha)
        if abs(nxt - alpha) <= settings.eps_alpha:
            alpha = nxt
            ok = True
            break
        alpha = nxt
    if not ok:
        raise SolverError("saturation iteration did not converge",
                          residual=abs(f(alpha) - alpha))
    if settings.polish:
        # secant refinement of h(a) = f(a) - a for machine-level residual
        a0, a1 = alpha, min(1.0, alpha + max(1e-9, settings.eps_alpha))
        h0, h1 = f(a0) - a0, f(a1) - a1
        for _ in range(60):
            if h1 == h0:
                break
            a2 = a1 - h1 * (a1 - a0) / (h1 - h0)
            if not (0.0 <= a2 <= 1.0) or not math.isfinite(a2):
                break
            a0, h0 = a1, h1
            a1 = a2
            h1 = f(a1) - a1
            if abs(h1) <= 1e-16:
                break
        if abs(h1) < abs(f(alpha) - alpha):
            alpha = a1
    alpha = min(1.0, max(0.0, alpha))
    q_total = q_min / (1.0 - r * alpha)
    return alpha, q_total


def discrete_tls_shift(nbar: float, T: float, f_r_current: float,
                       dt: DiscreteTlsParams) -> float:
    """Dispersive pull (rad/s) of a single strongly-coupled TLS,
    chi_0(T)/sqrt(1 + nbar/n_c) with chi_0 = -(g^2/dw) tanh(hbar w_tls/2kT)."""
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    if not (T > 0):
        raise ValueError("T must be positive")
    g = 2.0 * math.pi * dt.g_over_2pi
    delta_omega = 2.0 * math.pi * (dt.omega_tls_over_2pi - f_r_current)
    if abs(delta_omega) < 10.0 * g:
        import warnings
        warnings.warn("discrete TLS is outside the dispersive regime "
                      "(|w_tls - w_r| < 10 g)", stacklevel=2)
    n_c = (delta_omega / (2.0 * g)) ** 2
    chi0 = -(g * g / delta_omega) * math.tanh(
        half_quantum_ratio(dt.omega_tls_over_2pi, T))
    return chi0 / math.sqrt(1.0 + nbar / n_c)


def discrete_tls_ncrit(f_r: float, dt: DiscreteTlsParams) -> float:
    """Critical phonon number n_c = ((w_tls - w_r)/2g)^2 of the pull."""
    return ((dt.omega_tls_over_2pi - f_r) / (2.0 * dt.g_over_2pi)) ** 2


# ---------------------------------------------------------------------------
# full operating point


def _evaluate(drive: DriveCondition, p: ResonatorParams, t: TlsEnsembleParams,
              th: ThermalParams, dt: DiscreteTlsParams | None,
              settings: SolverSettings, x: float, T: float) -> dict:
    """One pass of the outer map: from (x, T) to the full consistent state
    and the next (x, T).

    Rates and energy normalizations use the zero-temperature frequency
    f_r0; temperature shifts enter only through the detuning.
    """
    alpha, q_total = alpha_fixed_point(x, T, p, t, drive, settings)
    q_e = p.q_e
    q_i = 1.0 / (1.0 / q_total - 1.0 / q_e)
    chi_c = 4.0 * q_total ** 2 / (q_e * q_i)
    chi_d = 1.0 / (1.0 + 4.0 * q_total ** 2 * x * x)
    p_d = chi_c * chi_d * drive.p_s
    omega_r = 2.0 * math.pi * p.f_r0
    nbar = q_i * p_d / (HBAR * omega_r ** 2)
    T_next = t_of_pd(p_d, th)
    f_r_next = p.f_r0 + delta_fr(T_next, p, t)
    if dt is not None:
        f_r_next += discrete_tls_shift(nbar, T_next, f_r_next, dt) \
            / (2.0 * math.pi)
    x_next = (drive.f_probe - f_r_next) / f_r_next
    return {
        "alpha": alpha, "q_total": q_total, "q_i": q_i, "p_d": p_d,
        "nbar": nbar, "T_next": T_next, "f_r_next": f_r_next,
        "x_next": x_next,
    }


def _newton_polish(drive: DriveCondition, p: ResonatorParams,
                   t: TlsEnsembleParams, th: ThermalParams,
                   dt: DiscreteTlsParams | None, settings: SolverSettings,
                   x: float, T: float) -> tuple[float, float, dict]:
    """Damped 2D Newton refinement of the joint fixed point.

    Zeroes F(x, T) = (x_next - x, T_next - T) with a finite-difference
    Jacobian.  The iteration-loop endpoint is already inside the right
    basin, so steps are capped to stay local; the best visited state is
    returned (never worse than the input)."""

    def residual(xv: float, tv: float) -> tuple[np.ndarray, dict]:
        st = _evaluate(drive, p, t, th, dt, settings, xv, tv)
        return np.array([st["x_next"] - xv, st["T_next"] - tv]), st

    f0, st0 = residual(x, T)
    best = (x, T, st0, abs(f0[0]) + abs(f0[1]) / T)
    for _ in range(30):
        scale = abs(f0[0]) + abs(f0[1]) / T
        if scale <= 1e-15:
            break
        hx = max(1e-13, 0.1 * abs(f0[0]))
        ht = max(1e-12 * T, 0.1 * abs(f0[1]))
        fx, _ = residual(x + hx, T)
        ft, _ = residual(x, T + ht)
        jac = np.array([[(fx[0] - f0[0]) / hx, (ft[0] - f0[0]) / ht],
                        [(fx[1] - f0[1]) / hx, (ft[1] - f0[1]) / ht]])
        try:
            step = np.linalg.solve(jac, -f0)
        except np.linalg.LinAlgError:
            break
        # stay local: the loop already isolated the physical branch
        lim_x = 1e3 * max(abs(f0[0]), 1e-12)
        lim_t = 0.05 * T
        step[0] = max(-lim_x, min(lim_x, step[0]))
        step[1] = max(-lim_t, min(lim_t, step[1]))
        x_new = x + step[0]
        T_new = max(th.t0, T + step[1])
        f_new, st_new = residual(x_new, T_new)
        metric = abs(f_new[0]) + abs(f_new[1]) / T_new
        if not math.isfinite(metric):
            break
        x, T, f0, st0 = x_new, T_new, f_new, st_new
        if metric < best[3]:
            best = (x, T, st0, metric)
        if metric > 10.0 * best[3] and metric > 1e-12:
            break
    return best[0], best[1], best[2]


def solve_point(x0_applied: float | None, drive: DriveCondition,
                p: ResonatorParams, t: TlsEnsembleParams, th: ThermalParams,
                dt: DiscreteTlsParams | None = None,
                warm_start: OperatingPoint | None = None,
                dcm: DcmParams | None = None,
                settings: SolverSettings | None = None) -> OperatingPoint:
    """Self-consistent operating point for one readout tone.

    ``x0_applied`` is the applied detuning relative to the cold resonance
    f_r(t0); when None it is derived from ``drive.f_probe``, and vice versa
    the probe frequency is reconstructed when only ``x0_applied`` is given.
    ``warm_start`` seeds the temperature (branch selection along sweeps).
    """
    settings = settings or SolverSettings()
    t0 = th.t0

    # cold resonance: continuum shift at t0, discrete TLS unsaturated
    f_r_cold = p.f_r0 + delta_fr(t0, p, t)
    if dt is not None:
        f_r_cold += discrete_tls_shift(0.0, t0, f_r_cold, dt) / (2.0 * math.pi)
    if x0_applied is None:
        drive_eff = drive
        x0_applied = (drive.f_probe - f_r_cold) / f_r_cold
    else:
        drive_eff = replace(drive, f_probe=f_r_cold * (1.0 + x0_applied))

    T = warm_start.temperature if warm_start is not None else t0
    T = max(T, t0)
    # realized detuning consistent with the starting temperature
    f_r_start = p.f_r0 + delta_fr(T, p, t)
    if dt is not None:
        nb0 = warm_start.nbar if warm_start is not None else 0.0
        f_r_start += discrete_tls_shift(nb0, T, f_r_start, dt) / (2.0 * math.pi)
    x = (drive_eff.f_probe - f_r_start) / f_r_start

    accel = AndersonAccelerator(settings.anderson_depth)
    use_anderson = settings.accel == "anderson"
    prev_resid = math.inf
    bad_steps = 0
    best_resid = math.inf
    stall = 0
    damped_only = not use_anderson
    beta_eff = settings.mix_beta
    converged = False
    history: list[float] = []
    state = None
    for it in range(1, settings.max_x_iter + 1):
        state = _evaluate(drive_eff, p, t, th, dt, settings, x, T)
        gx = state["x_next"]
        T_next = state["T_next"]
        resid = abs(gx - x)
        history.append(resid)
        # joint settling: with acceleration a small x-residual alone does
        # not imply the temperature has stopped moving
        if resid <= settings.eps_x and abs(T_next - T) <= 1e-6 * T_next:
            x, T = gx, T_next
            converged = True
            break
        # stall watchdog: alternate between a damped phase (defeats limit
        # cycles around folds) and Anderson (accelerates the slow ghost
        # transit past a vanished branch)
        if resid < 0.7 * best_resid:
            best_resid = resid
            stall = 0
        else:
            stall += 1
            if stall >= 40:
                damped_only = not damped_only or not use_anderson
                accel.reset()
                stall = 0
        if damped_only:
            x_new = (1.0 - beta_eff) * x + beta_eff * gx
        elif it > 2:
            if resid > prev_resid:
                bad_steps += 1
            else:
                bad_steps = 0
            if bad_steps >= 3:
                # oscillation: fall back to damped mixing for a while
                accel.reset()
                x_new = (1.0 - settings.mix_beta) * x + settings.mix_beta * gx
                bad_steps = 0
            else:
                x_new = float(accel.step(x, gx)[0])
                # trust region: an extrapolation far beyond the current
                # residual scale may hop into another attractor's basin
                if (not math.isfinite(x_new)
                        or abs(x_new - gx) > 3.0 * resid):
                    accel.reset()
                    x_new = gx
        else:
            # warm-up passes of the bare map keep the iterate inside the
            # basin selected by the initialization before accelerating
            accel.step(x, gx)
            x_new = gx
        prev_resid = resid
        T = T_next
        x = x_new
    else:
        raise SolverError("detuning iteration did not converge",
                          residual=history[-1] if history else None,
                          history=history)
    iterations = it

    if settings.polish:
        x, T, state = _newton_polish(drive_eff, p, t, th, dt, settings, x, T)
    else:
        state = _evaluate(drive_eff, p, t, th, dt, settings, x, T)

    # report a single coherent state: alpha, Q, P_d, nbar and T all derive
    # from the polished x, and S11 is assembled from the same (Q, x) so the
    # energy identities hold exactly
    q_total = state["q_total"]
    q_i = state["q_i"]
    p_d = state["p_d"]
    nbar = state["nbar"]
    T_fin = state["T_next"]
    f_r_fin = state["f_r_next"]
    y = q_total * x
    phi = dcm.phi_rot if dcm is not None else 0.0
    s11 = 1.0 - (2.0 * q_total / p.q_e) * (1.0 + 1.0j * math.tan(phi)) \
        / (1.0 + 2.0j * q_total * x)
    point = OperatingPoint(
        temperature=T_fin, nbar=nbar, q_i=q_i, q_total=q_total, f_r=f_r_fin,
        x_detuning=x, y_fractional=y, s11=s11, p_d=p_d,
        alpha_sat=state["alpha"], iterations=iterations, converged=converged)
    point.validate(t0, dcm_rotated=phi != 0.0)
    return point


# ---------------------------------------------------------------------------
# sweeps


def sweep_frequency(grid, drive: DriveCondition, p: ResonatorParams,
                    t: TlsEnsembleParams, th: ThermalParams,
                    dt: DiscreteTlsParams | None = None,
                    dcm: DcmParams | None = None,
                    settings: SolverSettings | None = None,
                    enforce_far_start: bool = True) -> SweepResult:
    """Directional frequency sweep with warm-started continuation.

    The grid must be strictly monotone and match ``drive.direction``; the
    first point must sit at least 20 low-power linewidths from the cold
    resonance so that the sweep enters the hysteresis region from a
    single-valued state.
    """
    grid = list(grid)
    if len(grid) < 2:
        raise ValueError("grid needs at least two points")
    inc = grid[1] > grid[0]
    if any((b > a) != inc or b == a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly monotone")
    direction = drive.direction
    if direction == SweepDirection.UP and not inc:
        raise ValueError("up sweep requires an increasing grid")
    if direction == SweepDirection.DOWN and inc:
        raise ValueError("down sweep requires a decreasing grid")

    f_r_cold = p.f_r0 + delta_fr(th.t0, p, t)
    if dt is not None:
        f_r_cold += discrete_tls_shift(0.0, th.t0, f_r_cold, dt) \
            / (2.0 * math.pi)
    alpha0, q_cold = alpha_fixed_point(0.0, th.t0, p, t,
                                       replace(drive, p_s=0.0),
                                       settings or SolverSettings())
    if enforce_far_start:
        y_first = q_cold * (grid[0] - f_r_cold) / f_r_cold
        if abs(y_first) < FAR_DETUNED_LINEWIDTHS:
            raise ValueError(
                f"first sweep point is only {abs(y_first):.1f} linewidths "
                f"from resonance; need >= {FAR_DETUNED_LINEWIDTHS}")

    points: list[OperatingPoint] = []
    warm: OperatingPoint | None = None
    for f in grid:
        pt = solve_point(None, replace(drive, f_probe=f), p, t, th, dt=dt,
                         warm_start=warm, dcm=dcm, settings=settings)
        points.append(pt)
        warm = pt
    result = SweepResult(points=points, direction=direction, p_s=drive.p_s)
    result.jump_indices = detect_jumps([pt.y_fractional for pt in points])
    return result


def sweep_power(ps_grid, f_probe: float | None, p: ResonatorParams,
                t: TlsEnsembleParams, th: ThermalParams,
                dt: DiscreteTlsParams | None = None,
                x0_applied: float | None = None,
                dcm: DcmParams | None = None,
                settings: SolverSettings | None = None) -> SweepResult:
    """Fixed-frequency power sweep (single-valued in power), warm-started
    upward in power.  Either the absolute probe frequency or the applied
    detuning may be given; x0_applied = 0 probes the cold resonance."""
    if (f_probe is None) == (x0_applied is None):
        raise ValueError("give exactly one of f_probe or x0_applied")
    points: list[OperatingPoint] = []
    warm: OperatingPoint | None = None
    for ps in ps_grid:
        drive = DriveCondition(f_probe=f_probe if f_probe is not None
                               else p.f_r0, p_s=ps,
                               direction=SweepDirection.FIXED)
        pt = solve_point(x0_applied, drive, p, t, th, dt=dt, warm_start=warm,
                         dcm=dcm, settings=settings)
        points.append(pt)
        warm = pt
    return SweepResult(points=points, direction=SweepDirection.FIXED,
                       p_s=float("nan"))


def detect_jumps(y_values: list[float], abs_floor: float = 0.3,
                 rel_factor: float = 8.0) -> list[int]:
    """Indices where the realized detuning jumps discontinuously.

    A jump must exceed both an absolute floor and a multiple of the median
    grid-to-grid change, and must be an isolated spike rather than part of
    a steep smooth ramp (it dwarfs at least one of its neighbor steps).
    Consecutive flagged points (branch settling over a couple of grid
    steps) are merged into the first index of each cluster.
    """
    if len(y_values) < 3:
        return []
    dy = [abs(b - a) for a, b in zip(y_values, y_values[1:])]
    med = sorted(dy)[len(dy) // 2]
    thresh = max(abs_floor, rel_factor * med)
    raw = []
    for i, d in enumerate(dy):
        if d <= thresh:
            continue
        neighbors = [dy[j] for j in (i - 1, i + 1) if 0 <= j < len(dy)]
        if d > 2.5 * min(neighbors):
            raw.append(i + 1)
    # clusters are runs of consecutive indices; keep each run's first
    out: list[int] = []
    prev = None
    for idx in raw:
        if prev is None or idx != prev + 1:
            out.append(idx)
        prev = idx
    return out


# ---------------------------------------------------------------------------
# resonance-depth inversion


def dcm_q_from_depth(s: float, phi: float, q_e: float
                     ) -> tuple[float, float]:
    """Loaded Q from the on-resonance reflection depth s = |S11|min under
    the diameter-correction rotation phi.

    Returns (Q_minus, Q_plus) for the under- and over-coupled branches.
    The depth cannot fall below s_min = |sin phi|.
    """
    s_min = abs(math.sin(phi))
    if s < s_min:
        raise ValueError(f"depth {s} below the observable minimum {s_min}")
    sec2 = 1.0 / math.cos(phi) ** 2
    root = math.sqrt(max(0.0, 1.0 + (s * s - 1.0) * sec2))
    base = 0.5 * q_e * math.cos(phi) ** 2
    return base * (1.0 - root), base * (1.0 + root)


def dcm_max_depth_db(phi: float) -> float:
    """Deepest observable resonance in dB, 20 log10 |sin phi|."""
    return 20.0 * math.log10(abs(math.sin(phi)))


def dcm_q_uncertainty(s: float, sigma_s: float) -> float:
    """Relative uncertainty sigma_Q/Q = sigma_s/(1-s) of the depth method."""
    return sigma_s / (1.0 - s)
