"""Batch command-line front end.

Subcommands: sweep-s11, power-sweep, ringdown, sweep-dynamic,
phase-diagram, swenson, duffing, holeburn, thermal-conductance, presets.

Configuration is a flat key/value table assembled from (in order of
increasing precedence) preset values, a ``--config`` file, repeated
``--set key=value`` overrides and dedicated command flags.  Unknown keys
are rejected.  Temperatures default to mK and powers to dBm at this
boundary; the library below works in SI units only.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .params import (
    BeamGeometry,
    DcmParams,
    DiscreteTlsParams,
    DriveCondition,
    ResonatorParams,
    SolverError,
    SweepDirection,
    ThermalParams,
    TlsEnsembleParams,
)
from . import io as tio
from .dynamics import integrate_tn, swept_response_dynamic
from .holeburning import HoleburnParams, gamma0_from_loss_tangent, holeburn_selfconsistent
from .perturbative import (
    DuffingScales,
    duffing_a_star,
    duffing_scales,
    duffing_solve,
    swenson_branch,
)
from .phase_diagram import bistability_contour, heating_scale, phase_scan
from .presets import PRESETS, get_preset
from .steady_solver import alpha_fixed_point, solve_point, sweep_frequency, sweep_power
from .thermal import default_heat_capacity, gamma_exponent, landauer_conductance
from .tls_response import delta_fr, q_i_inv


class CliConfigError(Exception):
    """Configuration problem; maps to exit code 2."""


# ---------------------------------------------------------------------------
# quantity parsing

_FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_TEMP_UNITS = {"k": 1.0, "mk": 1e-3, "uk": 1e-6}


def parse_frequency(text: str) -> float:
    """Frequency in Hz; plain numbers are Hz."""
    s = str(text).strip().lower()
    for suffix, scale in sorted(_FREQ_UNITS.items(), key=lambda kv: -len(kv[0])):
        if s.endswith(suffix):
            return float(s[: -len(suffix)]) * scale
    return float(s)


def parse_temperature(text: str) -> float:
    """Temperature in K; plain numbers are mK."""
    s = str(text).strip().lower()
    for suffix, scale in sorted(_TEMP_UNITS.items(), key=lambda kv: -len(kv[0])):
        if s.endswith(suffix):
            return float(s[: -len(suffix)]) * scale
    return float(s) * 1e-3


def parse_power(text: str) -> float:
    """Power in W; plain numbers are dBm."""
    s = str(text).strip().lower()
    if s.endswith("dbm"):
        return tio.dbm_to_watts(float(s[:-3]))
    if s.endswith("w"):
        return float(s[:-1])
    return tio.dbm_to_watts(float(s))


def parse_range(text: str) -> np.ndarray:
    """start:stop:count range specification (inclusive endpoints)."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise CliConfigError(f"range must be start:stop:count, got {text!r}")
    start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 2:
        raise CliConfigError("range count must be >= 2")
    return np.linspace(start, stop, count)


def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise CliConfigError(f"not a boolean: {text!r}")


# key -> parser; shared device-parameter block
_DEVICE_KEYS = {
    "f_r0": parse_frequency,
    "kappa_e_over_2pi": parse_frequency,
    "q_bkg": float,
    "fd0_reac": float,
    "fd0_diss": float,
    "n_s": float,
    "beta": float,
    "q_rel_ref": float,
    "d_exp": float,
    "n_ch": float,
    "gamma": float,
    "c_th": float,
    "omega_tls_over_2pi": parse_frequency,
    "g_over_2pi": parse_frequency,
    "include_discrete": parse_bool,
    "phi_rot": float,
    "t0": parse_temperature,
}

_COMMAND_KEYS: dict[str, dict] = {
    "sweep-s11": {
        "ps": parse_power, "f_span": parse_frequency,
        "n_points": int, "direction": str,
    },
    "power-sweep": {
        "ps_start": parse_power, "ps_stop": parse_power, "n_powers": int,
        "x0": float,
    },
    "ringdown": {
        "ps": parse_power, "f_probe": parse_frequency, "x0": float,
        "t_end": float, "n_samples": int,
    },
    "sweep-dynamic": {
        "ps": parse_power, "f_span": parse_frequency, "n_points": int,
        "direction": str, "t_meas": float, "if_bandwidth": parse_frequency,
        "k_filter": float,
    },
    "phase-diagram": {
        "ps_start": parse_power, "ps_stop": parse_power, "n_powers": int,
        "param": str, "param_start": float, "param_stop": float,
        "n_params": int,
    },
    "swenson": {"a": float, "y0_range": str, "direction": str},
    "duffing": {"ps": parse_power, "y0_range": str, "direction": str},
    "holeburn": {
        "ps": parse_power, "f_span": parse_frequency, "n_points": int,
    },
    "thermal-conductance": {
        "width": float, "thickness": float, "speed": float,
        "bandgap_center": parse_frequency, "bandgap_width": parse_frequency,
        "bandgap_halfwidth": parse_bool, "n_beams": int,
        "t_start": parse_temperature, "t_stop": parse_temperature,
        "n_temps": int, "x_max": float,
    },
    "presets": {},
}

_DEFAULTS: dict[str, dict] = {
    "sweep-s11": {"ps": tio.dbm_to_watts(-130.0), "n_points": 801,
                  "direction": "up", "t0": 0.025},
    "power-sweep": {"ps_start": tio.dbm_to_watts(-160.0),
                    "ps_stop": tio.dbm_to_watts(-90.0), "n_powers": 71,
                    "x0": 0.0, "t0": 0.025},
    "ringdown": {"ps": tio.dbm_to_watts(-130.0), "x0": 0.0,
                 "t_end": 5e-3, "n_samples": 400, "t0": 0.025},
    "sweep-dynamic": {"ps": tio.dbm_to_watts(-130.0), "n_points": 241,
                      "direction": "up", "t_meas": 5e-3,
                      "k_filter": 2.0, "t0": 0.025},
    "phase-diagram": {"ps_start": tio.dbm_to_watts(-150.0),
                      "ps_stop": tio.dbm_to_watts(-90.0), "n_powers": 60,
                      "param": "fd0", "param_start": 1e-8,
                      "param_stop": 1e-3, "n_params": 40, "t0": 0.025},
    "swenson": {"a": 0.0, "y0_range": "-3:3:601", "direction": "up"},
    "duffing": {"ps": tio.dbm_to_watts(-140.0), "y0_range": "-3:3:601",
                "direction": "up", "t0": 0.025},
    "holeburn": {"ps": tio.dbm_to_watts(-110.0), "f_span": 4e7,
                 "n_points": 401, "t0": 0.025},
    "thermal-conductance": {"width": 3.9e-6, "thickness": 1e-6,
                            "speed": 4000.0, "n_beams": 1,
                            "bandgap_halfwidth": True,
                            "t_start": 0.01, "t_stop": 0.3, "n_temps": 25,
                            "x_max": 10.0},
    "presets": {},
}


def _schema_for(command: str) -> dict:
    schema = dict(_DEVICE_KEYS)
    schema.update(_COMMAND_KEYS[command])
    return schema


def _read_config_file(path: str, schema: dict) -> dict:
    values: dict = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CliConfigError(f"cannot read config file: {exc}")
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliConfigError(
                f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key == "preset":
            values[key] = val
            continue
        if key not in schema:
            raise CliConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = schema[key](val)
        except (ValueError, TypeError) as exc:
            raise CliConfigError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return values


def _apply_sets(pairs: list[str], schema: dict, values: dict) -> None:
    for item in pairs:
        if "=" not in item:
            raise CliConfigError(f"--set needs key=value, got {item!r}")
        key, _, val = item.partition("=")
        key = key.strip()
        if key == "preset":
            values[key] = val.strip()
            continue
        if key not in schema:
            raise CliConfigError(f"--set: unknown key {key!r}")
        try:
            values[key] = schema[key](val.strip())
        except (ValueError, TypeError) as exc:
            raise CliConfigError(f"--set {key}: bad value: {exc}")


def build_config(args: argparse.Namespace, command: str) -> dict:
    """Merge preset, config file, --set overrides and dedicated flags."""
    schema = _schema_for(command)
    values: dict = dict(_DEFAULTS[command])
    preset_name = None
    file_values: dict = {}
    if args.config:
        file_values = _read_config_file(args.config, schema)
        preset_name = file_values.pop("preset", None)
    if getattr(args, "preset", None):
        preset_name = args.preset
    set_values: dict = {}
    _apply_sets(args.set or [], schema, set_values)
    preset_name = set_values.pop("preset", preset_name)

    if preset_name:
        try:
            preset = get_preset(preset_name)
        except KeyError as exc:
            raise CliConfigError(str(exc))
        values.update({
            "preset": preset.name,
            "f_r0": preset.resonator.f_r0,
            "kappa_e_over_2pi": preset.resonator.kappa_e_over_2pi,
            "q_bkg": preset.resonator.q_bkg,
            "fd0_reac": preset.tls.fd0_reac,
            "fd0_diss": preset.tls.fd0_diss,
            "n_s": preset.tls.n_s,
            "beta": preset.tls.beta,
            "q_rel_ref": preset.tls.q_rel_ref,
            "d_exp": preset.tls.d_exp,
            "n_ch": preset.n_ch,
            "gamma": preset.gamma,
        })
        if preset.discrete is not None:
            values["omega_tls_over_2pi"] = preset.discrete.omega_tls_over_2pi
            values["g_over_2pi"] = preset.discrete.g_over_2pi
    values.update(file_values)
    values.update(set_values)

    # dedicated flags override everything
    for key, parser in schema.items():
        flag = key.replace("-", "_")
        if hasattr(args, flag) and getattr(args, flag) is not None:
            raw = getattr(args, flag)
            try:
                values[key] = parser(raw)
            except (ValueError, TypeError) as exc:
                raise CliConfigError(f"--{key.replace('_', '-')}: {exc}")
    return values


def _device_from(cfg: dict, command: str):
    required = ("f_r0", "kappa_e_over_2pi", "fd0_reac", "fd0_diss", "n_s",
                "n_ch", "gamma")
    missing = [k for k in required if k not in cfg]
    if missing:
        raise CliConfigError(
            f"missing device parameters: {', '.join(missing)} "
            f"(give a --preset or set them explicitly)")
    try:
        p = ResonatorParams(f_r0=cfg["f_r0"],
                            kappa_e_over_2pi=cfg["kappa_e_over_2pi"],
                            q_bkg=cfg.get("q_bkg", math.inf))
        t = TlsEnsembleParams(fd0_reac=cfg["fd0_reac"],
                              fd0_diss=cfg["fd0_diss"], n_s=cfg["n_s"],
                              beta=cfg.get("beta", 1.0),
                              q_rel_ref=cfg.get("q_rel_ref", math.inf),
                              d_exp=cfg.get("d_exp", 1.0))
        th = ThermalParams(t0=cfg["t0"], n_ch=cfg["n_ch"],
                           gamma=cfg["gamma"], c_th=cfg.get("c_th"))
    except ValueError as exc:
        raise CliConfigError(str(exc))
    dt = None
    if cfg.get("include_discrete", True) and "omega_tls_over_2pi" in cfg \
            and "g_over_2pi" in cfg:
        dt = DiscreteTlsParams(
            omega_tls_over_2pi=cfg["omega_tls_over_2pi"],
            g_over_2pi=cfg["g_over_2pi"])
    dcm = DcmParams(phi_rot=cfg["phi_rot"]) if "phi_rot" in cfg else None
    return p, t, th, dt, dcm


def _point_rows(sweep, direction: str) -> list[list]:
    rows = []
    for pt in sweep.points:
        f = pt.f_r * (1.0 + pt.x_detuning)
        rows.append([f, direction, pt.s11.real, pt.s11.imag, pt.temperature,
                     pt.nbar, pt.q_i, pt.f_r, pt.y_fractional,
                     int(pt.converged)])
    return rows


S11_COLUMNS = ["f_Hz", "direction", "re_s11", "im_s11", "T_K", "nbar",
               "Qi", "fr_Hz", "y", "converged"]


# ---------------------------------------------------------------------------
# subcommand implementations


def _cmd_sweep_s11(cfg: dict, out: str, fmt: str) -> str:
    p, t, th, dt, dcm = _device_from(cfg, "sweep-s11")
    f_cold = p.f_r0 + delta_fr(th.t0, p, t)
    q_cold = 1.0 / (q_i_inv(th.t0, 0.0, p, t) + 1.0 / p.q_e)
    span = cfg.get("f_span") or 60.0 * f_cold / q_cold
    n = cfg["n_points"]
    grid = np.linspace(f_cold - span / 2.0, f_cold + span / 2.0, n)
    directions = [cfg["direction"]]
    if cfg["direction"] == "both":
        directions = [SweepDirection.UP, SweepDirection.DOWN]
    rows: list[list] = []
    n_jumps = 0
    for direction in directions:
        g = grid if direction == SweepDirection.UP else grid[::-1]
        sweep = sweep_frequency(
            g, DriveCondition(f_probe=f_cold, p_s=cfg["ps"],
                              direction=direction),
            p, t, th, dt=dt, dcm=dcm)
        n_jumps += len(sweep.jump_indices)
        rows.extend(_point_rows(sweep, direction))
    meta = tio.metadata_block(cfg, "sweep-s11")
    meta["jump_count"] = n_jumps
    tio.write_table(out, fmt, S11_COLUMNS, rows, meta)
    return (f"sweep-s11: {len(rows)} points, {n_jumps} jumps, "
            f"span {span:.3g} Hz -> {out}")


def _cmd_power_sweep(cfg: dict, out: str, fmt: str) -> str:
    p, t, th, dt, dcm = _device_from(cfg, "power-sweep")
    ps_axis = np.geomspace(cfg["ps_start"], cfg["ps_stop"], cfg["n_powers"])
    sweep = sweep_power(ps_axis, None, p, t, th, dt=dt,
                        x0_applied=cfg["x0"], dcm=dcm)
    columns = ["ps_W", "ps_dBm", "T_K", "nbar", "Qi", "Q", "fr_Hz", "x",
               "y", "re_s11", "im_s11", "pd_W", "converged"]
    rows = []
    for ps, pt in zip(ps_axis, sweep.points):
        rows.append([float(ps), tio.watts_to_dbm(ps), pt.temperature,
                     pt.nbar, pt.q_i, pt.q_total, pt.f_r, pt.x_detuning,
                     pt.y_fractional, pt.s11.real, pt.s11.imag, pt.p_d,
                     int(pt.converged)])
    tio.write_table(out, fmt, columns, rows, tio.metadata_block(cfg, "power-sweep"))
    return f"power-sweep: {len(rows)} points -> {out}"


def _cmd_ringdown(cfg: dict, out: str, fmt: str) -> str:
    p, t, th, dt, _ = _device_from(cfg, "ringdown")
    f_cold = p.f_r0 + delta_fr(th.t0, p, t)
    f_probe = cfg.get("f_probe") or f_cold * (1.0 + cfg["x0"])
    traj = integrate_tn((th.t0, 0.0),
                        DriveCondition(f_probe=f_probe, p_s=cfg["ps"]),
                        p, t, th, t_end=cfg["t_end"], dt=dt,
                        n_samples=cfg["n_samples"])
    columns = ["t_s", "T_K", "n", "re_s11", "im_s11"]
    rows = [[float(ts), float(T), float(n), float(s.real), float(s.imag)]
            for ts, T, n, s in zip(traj.t, traj.temperature,
                                   traj.n_phonons, traj.s11)]
    meta = tio.metadata_block(cfg, "ringdown")
    meta["c_th_used"] = th.c_th if th.c_th is not None else \
        default_heat_capacity(th)
    tio.write_table(out, fmt, columns, rows, meta)
    T_end, n_end = traj.endpoint()
    return (f"ringdown: T(end)={T_end:.6g} K, n(end)={n_end:.6g} -> {out}")


def _cmd_sweep_dynamic(cfg: dict, out: str, fmt: str) -> str:
    p, t, th, dt, _ = _device_from(cfg, "sweep-dynamic")
    f_cold = p.f_r0 + delta_fr(th.t0, p, t)
    q_cold = 1.0 / (q_i_inv(th.t0, 0.0, p, t) + 1.0 / p.q_e)
    span = cfg.get("f_span") or 60.0 * f_cold / q_cold
    grid = np.linspace(f_cold - span / 2.0, f_cold + span / 2.0,
                       cfg["n_points"])
    direction = cfg["direction"]
    if direction == SweepDirection.DOWN:
        grid = grid[::-1]
    sweep = swept_response_dynamic(
        grid, DriveCondition(f_probe=f_cold, p_s=cfg["ps"],
                             direction=direction),
        p, t, th, t_meas=cfg["t_meas"],
        if_bandwidth=cfg.get("if_bandwidth"), dt=dt,
        k_filter=cfg["k_filter"])
    rows = _point_rows(sweep, direction)
    tio.write_table(out, fmt, S11_COLUMNS, rows,
                    tio.metadata_block(cfg, "sweep-dynamic"))
    return f"sweep-dynamic: {len(rows)} points -> {out}"


def _cmd_phase_diagram(cfg: dict, out: str, fmt: str, threads: int) -> str:
    p, t, th, _, _ = _device_from(cfg, "phase-diagram")
    ps_axis = np.geomspace(cfg["ps_start"], cfg["ps_stop"], cfg["n_powers"])
    param_axis = np.geomspace(cfg["param_start"], cfg["param_stop"],
                              cfg["n_params"])
    grid = phase_scan(ps_axis, param_axis, p, t, th,
                      param_name=cfg["param"], workers=threads)
    polyline, flags = bistability_contour(grid)
    columns = [cfg["param"], "ps_W", "ps_dBm", "T_K", "nbar", "Qi",
               "fr_Hz", "y", "flagged"]
    rows = []
    for i, value in enumerate(grid.param_axis):
        for j, ps in enumerate(grid.ps_axis):
            pt = grid.cells[i][j]
            rows.append([value, ps, tio.watts_to_dbm(ps), pt.temperature,
                         pt.nbar, pt.q_i, pt.f_r, pt.y_fractional,
                         int(flags[i, j])])
    meta = tio.metadata_block(cfg, "phase-diagram")
    tio.write_table(out, fmt, columns, rows, meta)
    contour_path = out + ".contour"
    tio.write_table(contour_path, fmt,
                    [cfg["param"], "ps_crossing_W", "ps_crossing_dBm"],
                    [[v, w, tio.watts_to_dbm(w)] for v, w in polyline],
                    meta)
    return (f"phase-diagram: {flags.sum()} bistable cells of {flags.size} "
            f"-> {out}, contour -> {contour_path}")


def _cmd_swenson(cfg: dict, out: str, fmt: str) -> str:
    y0 = parse_range(cfg["y0_range"])
    direction = cfg["direction"]
    grid = y0 if direction == "up" else y0[::-1]
    ys, jumps = swenson_branch(grid, cfg["a"], direction)
    columns = ["y0", "y", "jumped"]
    jumpset = set(jumps)
    rows = [[float(g), float(y), int(i in jumpset)]
            for i, (g, y) in enumerate(zip(grid, ys))]
    meta = tio.metadata_block(cfg, "swenson")
    meta["jump_count"] = len(jumps)
    tio.write_table(out, fmt, columns, rows, meta)
    return f"swenson: a={cfg['a']}, {len(jumps)} jumps -> {out}"


def _cmd_duffing(cfg: dict, out: str, fmt: str) -> str:
    p, t, th, _, _ = _device_from(cfg, "duffing")
    scales = duffing_scales(th.t0, p, t, th)
    alpha0, q_total = alpha_fixed_point(
        0.0, th.t0, p, t, DriveCondition(f_probe=p.f_r0, p_s=0.0))
    a_star = duffing_a_star(th.t0, q_total, p.q_e, cfg["ps"], p, scales)
    y0 = parse_range(cfg["y0_range"])
    direction = cfg["direction"]
    grid = y0 if direction == "up" else y0[::-1]
    columns = ["y0", "k0", "k", "re_s11", "im_s11"]
    rows = []
    for v in grid:
        k0, k, s11 = duffing_solve(float(v), a_star, scales, q_total,
                                   p.q_e, direction)
        rows.append([float(v), k0, k, s11.real, s11.imag])
    meta = tio.metadata_block(cfg, "duffing")
    meta["a_star"] = a_star
    meta["phi_nl"] = scales.phi_nl
    tio.write_table(out, fmt, columns, rows, meta)
    return (f"duffing: a*={a_star:.4g}, phi={scales.phi_nl:.4f} rad "
            f"-> {out}")


def _cmd_holeburn(cfg: dict, out: str, fmt: str) -> str:
    p, t, th, _, _ = _device_from(cfg, "holeburn")
    gamma0 = gamma0_from_loss_tangent(p.f_r0, t.fd0_diss, th.t0)
    kappa_i0 = p.omega_r0 / p.q_bkg if math.isfinite(p.q_bkg) \
        else p.omega_r0 * 1e-9
    hp = HoleburnParams(g_over_2pi=cfg.get("g_over_2pi", 230e3),
                        n_s=t.n_s, gamma0=gamma0, kappa_i0=kappa_i0,
                        kappa_e=2.0 * math.pi * p.kappa_e_over_2pi)
    span = cfg["f_span"]
    grid = np.linspace(p.f_r0 - span / 2.0, p.f_r0 + span / 2.0,
                       cfg["n_points"])
    sweep = holeburn_selfconsistent(grid, cfg["ps"], hp, p)
    columns = ["f_Hz", "delta_rad_s", "nbar", "dwr_rad_s", "kappa_i_rad_s",
               "re_s11", "im_s11", "iterations", "converged"]
    rows = []
    for f, pt in zip(grid, sweep.points):
        omega_r = 2.0 * math.pi * pt.f_r
        delta = 2.0 * math.pi * float(f) - omega_r
        rows.append([float(f), delta, pt.nbar,
                     omega_r - p.omega_r0, p.omega_r0 / pt.q_i,
                     pt.s11.real, pt.s11.imag, pt.iterations,
                     int(pt.converged)])
    meta = tio.metadata_block(cfg, "holeburn")
    meta["gamma2_rad_s"] = hp.gamma2
    tio.write_table(out, fmt, columns, rows, meta)
    return f"holeburn: {len(rows)} points, Gamma2={hp.gamma2:.4g} rad/s -> {out}"


def _cmd_thermal_conductance(cfg: dict, out: str, fmt: str) -> str:
    geom = BeamGeometry(
        width_w=cfg["width"], thickness_t=cfg["thickness"],
        speed_c=cfg["speed"],
        bandgap_center_fb=cfg.get("bandgap_center"),
        bandgap_width_dfb=cfg.get("bandgap_width"),
        n_beams=cfg["n_beams"],
        bandgap_is_halfwidth=cfg["bandgap_halfwidth"])
    temps = np.geomspace(cfg["t_start"], cfg["t_stop"], cfg["n_temps"])
    columns = ["T_K", "Gth_W_per_K", "gamma"]
    rows = []
    for T in temps:
        g = landauer_conductance(geom, float(T), x_max=cfg["x_max"])
        gam = gamma_exponent(geom, float(T), x_max=cfg["x_max"])
        rows.append([float(T), g, gam])
    tio.write_table(out, fmt, columns, rows,
                    tio.metadata_block(cfg, "thermal-conductance"))
    return f"thermal-conductance: {len(rows)} temperatures -> {out}"


def _cmd_presets(cfg: dict, out: str | None, fmt: str) -> str:
    columns = ["preset", "key", "value"]
    rows: list[list] = []
    for name in sorted(PRESETS):
        pr = PRESETS[name]
        entries = {
            "description": pr.description,
            "f_r0": pr.resonator.f_r0,
            "kappa_e_over_2pi": pr.resonator.kappa_e_over_2pi,
            "q_bkg": pr.resonator.q_bkg,
            "fd0_reac": pr.tls.fd0_reac,
            "fd0_diss": pr.tls.fd0_diss,
            "n_s": pr.tls.n_s,
            "beta": pr.tls.beta,
            "q_rel_ref": pr.tls.q_rel_ref,
            "d_exp": pr.tls.d_exp,
            "n_ch": pr.n_ch,
            "gamma": pr.gamma,
        }
        if pr.discrete is not None:
            entries["omega_tls_over_2pi"] = pr.discrete.omega_tls_over_2pi
            entries["g_over_2pi"] = pr.discrete.g_over_2pi
        for key, value in entries.items():
            rows.append([name, key, value])
    if out:
        tio.write_table(out, fmt, columns, rows,
                        tio.metadata_block({}, "presets"))
        return f"presets: {len(PRESETS)} presets -> {out}"
    for name, key, value in rows:
        print(f"{name:8s} {key:22s} {value}")
    return f"presets: {len(PRESETS)} presets"


# ---------------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key=value configuration file")
    sub.add_argument("--set", action="append", metavar="K=V",
                     help="override one configuration key (repeatable)")
    sub.add_argument("--preset", choices=sorted(PRESETS),
                     help="named device preset")
    sub.add_argument("--output", default=None, help="output file path")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--threads", type=int, default=1,
                     help="parallel rows for grid scans")
    sub.add_argument("--t0", default=None,
                     help="bath temperature (default unit mK)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tlsim",
        description="TLS-bath nonlinear resonator response simulator")
    subs = parser.add_subparsers(dest="command", required=True)

    specs: dict[str, list[tuple[str, str]]] = {
        "sweep-s11": [("--ps", "probe power (default unit dBm)"),
                      ("--f-span", "sweep span in Hz"),
                      ("--n-points", "grid points"),
                      ("--direction", "up, down or both")],
        "power-sweep": [("--ps-start", "lowest power"),
                        ("--ps-stop", "highest power"),
                        ("--n-powers", "number of powers"),
                        ("--x0", "applied fractional detuning")],
        "ringdown": [("--ps", "probe power"),
                     ("--f-probe", "absolute probe frequency"),
                     ("--x0", "applied fractional detuning"),
                     ("--t-end", "integration time, s"),
                     ("--n-samples", "trajectory samples")],
        "sweep-dynamic": [("--ps", "probe power"),
                          ("--f-span", "sweep span in Hz"),
                          ("--n-points", "grid points"),
                          ("--direction", "up or down"),
                          ("--t-meas", "dwell per point, s"),
                          ("--if-bandwidth", "IF bandwidth, Hz"),
                          ("--k-filter", "IF time-constant factor")],
        "phase-diagram": [("--ps-start", "lowest power"),
                          ("--ps-stop", "highest power"),
                          ("--n-powers", "power points"),
                          ("--param", "second axis: fd0 or kappa_e"),
                          ("--param-start", "axis start"),
                          ("--param-stop", "axis stop"),
                          ("--n-params", "axis points")],
        "swenson": [("--a", "nonlinearity strength"),
                    ("--y0-range", "start:stop:count"),
                    ("--direction", "up or down")],
        "duffing": [("--ps", "probe power"),
                    ("--y0-range", "start:stop:count"),
                    ("--direction", "up or down")],
        "holeburn": [("--ps", "probe power"),
                     ("--f-span", "window span, Hz"),
                     ("--n-points", "grid points")],
        "thermal-conductance": [("--width", "beam width, m"),
                                ("--thickness", "beam thickness, m"),
                                ("--speed", "phonon speed, m/s"),
                                ("--bandgap-center", "gap center, Hz"),
                                ("--bandgap-width", "gap width, Hz"),
                                ("--n-beams", "beam count"),
                                ("--t-start", "lowest temperature"),
                                ("--t-stop", "highest temperature"),
                                ("--n-temps", "temperature points"),
                                ("--x-max", "UV cutoff")],
        "presets": [],
    }
    for command, flags in specs.items():
        sub = subs.add_parser(command)
        _add_common(sub)
        for flag, help_text in flags:
            sub.add_argument(flag, default=None, help=help_text)
    return parser


_DISPATCH = {
    "sweep-s11": _cmd_sweep_s11,
    "power-sweep": _cmd_power_sweep,
    "ringdown": _cmd_ringdown,
    "sweep-dynamic": _cmd_sweep_dynamic,
    "swenson": _cmd_swenson,
    "duffing": _cmd_duffing,
    "holeburn": _cmd_holeburn,
    "thermal-conductance": _cmd_thermal_conductance,
}


def _merge_negative_values(argv: list[str]) -> list[str]:
    """Join '--flag -3:3:601' style pairs into '--flag=-3:3:601' so that
    values with a leading minus (negative dBm powers, detuning ranges)
    survive argparse."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv):
            nxt = argv[i + 1]
            if len(nxt) >= 2 and nxt[0] == "-" \
                    and (nxt[1].isdigit() or nxt[1] == "."):
                out.append(tok + "=" + nxt)
                i += 2
                continue
        out.append(tok)
        i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(
        _merge_negative_values(list(sys.argv[1:] if argv is None else argv)))
    command = args.command
    try:
        cfg = build_config(args, command)
        out = args.output
        if command == "presets":
            summary = _cmd_presets(cfg, out, args.format)
        else:
            if out is None:
                raise CliConfigError("--output is required for this command")
            if command == "phase-diagram":
                summary = _cmd_phase_diagram(cfg, out, args.format,
                                             args.threads)
            else:
                summary = _DISPATCH[command](cfg, out, args.format)
    except CliConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
