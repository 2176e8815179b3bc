"""Grid studies of the nonlinear response over power and a second axis
(TLS loss tangent or external coupling): bistability region, response
landscapes, and power-scaling exponent extraction.

Every cell probes the cold resonance (applied detuning zero) and is solved
with a warm start from the previous power along its row; the response at
fixed probe frequency is single-valued in power, so the scan order does
not affect the result.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .params import (
    OperatingPoint,
    ResonatorParams,
    SweepDirection,
    ThermalParams,
    TlsEnsembleParams,
    DriveCondition,
)
from .perturbative import critical_fractional_detuning
from .steady_solver import SolverSettings, solve_point, sweep_frequency
from .thermal import n_h as n_h_scale
from .tls_response import delta_fr, q_i_inv


@dataclass
class PhaseGrid:
    """Matrix of operating points at fixed on-resonance probe."""

    ps_axis: list[float]          # W, strictly increasing
    param_axis: list[float]       # second axis values, strictly monotone
    param_name: str               # "fd0" or "kappa_e"
    t0: float
    cells: list[list[OperatingPoint]]   # [param][power]

    def y_matrix(self) -> np.ndarray:
        return np.array([[pt.y_fractional for pt in row]
                         for row in self.cells])

    def flags(self, threshold: float | None = None) -> np.ndarray:
        """Boolean bistability proxy |y| >= |y_c| per cell."""
        thr = abs(critical_fractional_detuning()) if threshold is None \
            else abs(threshold)
        return np.abs(self.y_matrix()) >= thr


def _axis_checked(values, name: str) -> list[float]:
    vals = [float(v) for v in values]
    diffs = [b - a for a, b in zip(vals, vals[1:])]
    if not diffs or all(d > 0 for d in diffs) or all(d < 0 for d in diffs):
        return vals
    raise ValueError(f"{name} axis must be strictly monotone")


def _apply_param(base_p: ResonatorParams, base_t: TlsEnsembleParams,
                 param_name: str, value: float
                 ) -> tuple[ResonatorParams, TlsEnsembleParams]:
    if param_name == "fd0":
        return base_p, replace(base_t, fd0_reac=value, fd0_diss=value)
    if param_name == "kappa_e":
        return replace(base_p, kappa_e_over_2pi=value), base_t
    raise ValueError("param_name must be 'fd0' or 'kappa_e'")


def _scan_row(args) -> list[OperatingPoint]:
    (value, param_name, base_p, base_t, th, ps_axis, settings) = args
    p, t = _apply_param(base_p, base_t, param_name, value)
    row: list[OperatingPoint] = []
    warm = None
    for ps in ps_axis:
        drive = DriveCondition(f_probe=p.f_r0, p_s=ps,
                               direction=SweepDirection.FIXED)
        pt = solve_point(0.0, drive, p, t, th, warm_start=warm,
                         settings=settings)
        row.append(pt)
        warm = pt
    return row


def phase_scan(ps_axis, param_axis, base_p: ResonatorParams,
               base_t: TlsEnsembleParams, th: ThermalParams,
               param_name: str = "fd0",
               settings: SolverSettings | None = None,
               workers: int = 1) -> PhaseGrid:
    """Solve the (power, parameter) grid at zero applied detuning.

    Rows (fixed parameter value) are independent and may be evaluated by a
    process pool; output ordering is deterministic either way.
    """
    ps_axis = _axis_checked(ps_axis, "power")
    param_axis = _axis_checked(param_axis, param_name)
    settings = settings or SolverSettings()
    jobs = [(v, param_name, base_p, base_t, th, ps_axis, settings)
            for v in param_axis]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_scan_row, jobs))
    else:
        cells = [_scan_row(job) for job in jobs]
    return PhaseGrid(ps_axis=ps_axis, param_axis=param_axis,
                     param_name=param_name, t0=th.t0, cells=cells)


def kappa_e_study(ps_axis, kappa_e_axis, base_p: ResonatorParams,
                  base_t: TlsEnsembleParams, th: ThermalParams,
                  settings: SolverSettings | None = None,
                  workers: int = 1) -> PhaseGrid:
    """Phase scan with the external coupling rate as the second axis."""
    return phase_scan(ps_axis, kappa_e_axis, base_p, base_t, th,
                      param_name="kappa_e", settings=settings,
                      workers=workers)


def bistability_contour(grid: PhaseGrid, threshold: float | None = None
                        ) -> tuple[list[tuple[float, float]], np.ndarray]:
    """Bistability boundary and per-cell flags.

    Returns a polyline of (param_value, ps_crossing) pairs, one per row
    that crosses the |y| threshold (log-interpolated in power), plus the
    boolean flag matrix.
    """
    flags = grid.flags(threshold)
    thr = abs(critical_fractional_detuning()) if threshold is None \
        else abs(threshold)
    ymat = np.abs(grid.y_matrix())
    polyline: list[tuple[float, float]] = []
    for i, value in enumerate(grid.param_axis):
        row = ymat[i]
        crossing = None
        for j in range(1, len(row)):
            if row[j] >= thr and row[j - 1] < thr:
                lo, hi = row[j - 1], row[j]
                w = (thr - lo) / (hi - lo)
                lp = math.log(grid.ps_axis[j - 1])
                hpw = math.log(grid.ps_axis[j])
                crossing = math.exp(lp + w * (hpw - lp))
                break
        if crossing is not None:
            polyline.append((value, crossing))
    return polyline, flags


def verify_flags_by_sweep(grid: PhaseGrid, base_p: ResonatorParams,
                          base_t: TlsEnsembleParams, th: ThermalParams,
                          cells: list[tuple[int, int]],
                          span_linewidths: float = 60.0,
                          n_points: int = 241,
                          settings: SolverSettings | None = None
                          ) -> list[tuple[int, int, bool, bool]]:
    """Direct hysteresis check of selected cells by up/down sweeps.

    Returns (i, j, flagged, hysteretic) per requested cell; the proxy is
    first-order so disagreement concentrates along the boundary band.
    """
    flags = grid.flags()
    out = []
    for i, j in cells:
        value = grid.param_axis[i]
        ps = grid.ps_axis[j]
        p, t = _apply_param(base_p, base_t, grid.param_name, value)
        f_cold = p.f_r0 + delta_fr(th.t0, p, t)
        q_cold = 1.0 / (q_i_inv(th.t0, 0.0, p, t) + 1.0 / p.q_e)
        half = span_linewidths * f_cold / q_cold / 2.0
        grid_f = np.linspace(f_cold - half, f_cold + half, n_points)
        up = sweep_frequency(grid_f, DriveCondition(
            f_probe=f_cold, p_s=ps, direction=SweepDirection.UP),
            p, t, th, settings=settings, enforce_far_start=False)
        dn = sweep_frequency(grid_f[::-1], DriveCondition(
            f_probe=f_cold, p_s=ps, direction=SweepDirection.DOWN),
            p, t, th, settings=settings, enforce_far_start=False)
        yu = np.array(up.y_values())
        yd = np.array(dn.y_values())[::-1]
        hysteretic = bool(np.any(np.abs(yu - yd) > 0.2)
                          or up.jump_indices or dn.jump_indices)
        out.append((i, j, bool(flags[i, j]), hysteretic))
    return out


REGIME_ORDER = ("linear", "saturation", "heating-onset", "asymptotic")


def _fit_loglog(xs: np.ndarray, ys: np.ndarray) -> float:
    coef = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(coef[0])


def scaling_exponents(ps_trace: list[OperatingPoint], ps_axis,
                      n_s: float, n_h_value: float, d_exp: float,
                      gamma: float, t0: float,
                      f_r_cold: float | None = None) -> dict:
    """Segment a fixed-frequency power sweep by occupancy and fit log-log
    slopes of the state variables per regime.

    Regime windows (quiet margins keep crossover curvature out of the
    fits); the asymptotic window additionally requires the realized
    detuning to have collapsed back inside the linewidth, which is what
    distinguishes it from the detuning-limited regime:

    * linear:        nbar <= min(n_s, n_h)/10
    * saturation:    10 n_s <= nbar <= n_h/10
    * heating-onset: n_h/3 <= nbar <= 3 n_h
    * asymptotic:    nbar >= 30 n_h and |y| <= 0.25

    Returns {regime: {quantity: slope}} plus the analytic asymptotic
    predictions.  The frequency-shift exponent eta (slope of f_r minus the
    cold resonance) is reported where the shift is resolved.
    """
    ps = np.asarray(list(ps_axis), dtype=float)
    nbar = np.array([pt.nbar for pt in ps_trace])
    temp = np.array([pt.temperature for pt in ps_trace])
    kappa_i = np.array([1.0 / pt.q_i for pt in ps_trace])
    p_d = np.array([pt.p_d for pt in ps_trace])
    y_abs = np.abs([pt.y_fractional for pt in ps_trace])
    f_r = np.array([pt.f_r for pt in ps_trace])
    if f_r_cold is None:
        f_r_cold = ps_trace[0].f_r
    n_lo = min(n_s, n_h_value)
    masks = {
        "linear": nbar <= n_lo / 10.0,
        "saturation": (nbar >= 10.0 * n_s) & (nbar <= n_h_value / 10.0),
        "heating-onset": (nbar >= n_h_value / 3.0)
        & (nbar <= 3.0 * n_h_value),
        "asymptotic": (nbar >= 30.0 * n_h_value) & (y_abs <= 0.25),
    }
    result: dict = {"regimes": {}, "expected_asymptotic": {
        "temperature": 1.0 / (1.0 + d_exp + gamma),
        "nbar": (1.0 - d_exp + gamma) / (1.0 + d_exp + gamma),
        "kappa_i": d_exp / (1.0 + d_exp + gamma),
    }}
    for regime, mask in masks.items():
        if mask.sum() < 3:
            result["regimes"][regime] = None
            continue
        entry = {
            "nbar": _fit_loglog(ps[mask], nbar[mask]),
            "kappa_i": _fit_loglog(ps[mask], kappa_i[mask]),
            "p_d": _fit_loglog(ps[mask], p_d[mask]),
        }
        rise = temp[mask] - t0
        if regime == "asymptotic":
            entry["temperature"] = _fit_loglog(ps[mask], temp[mask])
        elif np.all(rise > 0):
            entry["temperature_rise"] = _fit_loglog(ps[mask], rise)
        shift = f_r[mask] - f_r_cold
        if np.all(shift > 0):
            entry["eta"] = _fit_loglog(ps[mask], shift)
        result["regimes"][regime] = entry
    return result


def heating_scale(p: ResonatorParams, t: TlsEnsembleParams,
                  th: ThermalParams) -> float:
    """Reference n_h evaluated with the internal quality factor at the
    saturation occupancy n_s."""
    q_i = 1.0 / q_i_inv(th.t0, t.n_s, p, t)
    return n_h_scale(th.t0, q_i, p, th)
