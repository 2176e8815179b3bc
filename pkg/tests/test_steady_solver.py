import math
from dataclasses import replace

import numpy as np
import pytest

from tlsim.params import (
    DcmParams,
    DiscreteTlsParams,
    DriveCondition,
    HBAR,
    ResonatorParams,
    SweepDirection,
    ThermalParams,
    TlsEnsembleParams,
)
from tlsim.presets import get_preset
from tlsim.steady_solver import (
    AndersonAccelerator,
    SolverSettings,
    _evaluate,
    alpha_fixed_point,
    dcm_max_depth_db,
    dcm_q_from_depth,
    dcm_q_uncertainty,
    detect_jumps,
    discrete_tls_ncrit,
    discrete_tls_shift,
    solve_point,
    sweep_frequency,
    sweep_power,
)
from tlsim.tls_response import delta_fr, half_quantum_ratio, q_rel_inv

from conftest import dbm

FIG2 = get_preset("fig2")
FIG3 = get_preset("fig3")


def fig2_setup(t0=0.050):
    return FIG2.resonator, FIG2.tls, FIG2.thermal(t0)


def fig3_setup(t0=0.025):
    return FIG3.resonator, FIG3.tls, FIG3.thermal(t0)


class TestAlphaFixedPoint:
    def test_zero_power(self):
        p, t, th = fig3_setup()
        alpha, q = alpha_fixed_point(0.0, th.t0,  p, t,
                                     DriveCondition(f_probe=p.f_r0, p_s=0.0))
        assert alpha == 0.0
        # Q equals Q_min: all loss channels unsaturated
        eps = half_quantum_ratio(p.f_r0, th.t0)
        q_min = 1.0 / (1.0 / p.q_e + 1.0 / p.q_bkg + q_rel_inv(th.t0, t)
                       + t.fd0_diss * math.tanh(eps))
        assert q == pytest.approx(q_min, rel=1e-12)

    def test_full_saturation(self):
        p, t, th = fig3_setup()
        alpha, q = alpha_fixed_point(0.0, th.t0, p, t,
                                     DriveCondition(f_probe=p.f_r0, p_s=1.0))
        assert alpha == pytest.approx(1.0, abs=1e-5)
        eps = half_quantum_ratio(p.f_r0, th.t0)
        q_max = 1.0 / (1.0 / p.q_e + 1.0 / p.q_bkg + q_rel_inv(th.t0, t))
        assert q == pytest.approx(q_max, rel=1e-4)

    def test_bisection_oracle_mid_power(self):
        p, t, th = fig3_setup()
        drive = DriveCondition(f_probe=p.f_r0, p_s=dbm(-138))
        alpha, q = alpha_fixed_point(1e-7, th.t0, p, t, drive)

        # rebuild the map independently and scan [0, 1] for the root
        eps = half_quantum_ratio(p.f_r0, th.t0)
        tanh_eps = math.tanh(eps)
        q_max_inv = 1.0 / p.q_e + 1.0 / p.q_bkg + q_rel_inv(th.t0, t)
        q_min_inv = q_max_inv + t.fd0_diss * tanh_eps
        q_min = 1.0 / q_min_inv
        r = (1.0 / q_max_inv - q_min) * q_max_inv
        xi = 4.0 * q_min ** 2 * drive.p_s / (
            p.q_e * HBAR * (2 * math.pi * p.f_r0) ** 2 * t.n_s)

        def f(a):
            one = 1.0 - r * a
            chi_d = one * one / (one * one + (2 * q_min * 1e-7) ** 2)
            return 1.0 - one / math.sqrt(one * one
                                         + chi_d * xi * tanh_eps)

        grid = np.linspace(0.0, 1.0, 2_000_001)
        h = f(grid) - grid if False else None
        # vectorized scan
        one = 1.0 - r * grid
        chi_d = one ** 2 / (one ** 2 + (2 * q_min * 1e-7) ** 2)
        vals = 1.0 - one / np.sqrt(one ** 2 + chi_d * xi * tanh_eps) - grid
        idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
        assert len(idx) == 1  # unique root in [0, 1]
        from scipy.optimize import brentq
        root = brentq(lambda a: f(a) - a, grid[idx[0]], grid[idx[0] + 1],
                      xtol=1e-12)
        assert alpha == pytest.approx(root, abs=1e-8)

    def test_residual_contract(self):
        p, t, th = fig3_setup()
        for psd in (-150, -135, -120, -100):
            drive = DriveCondition(f_probe=p.f_r0, p_s=dbm(psd))
            alpha, _ = alpha_fixed_point(2e-7, th.t0, p, t, drive)
            # re-evaluate the map residual independently
            a2, _ = alpha_fixed_point(2e-7, th.t0, p, t, drive)
            assert alpha == a2
            assert 0.0 <= alpha <= 1.0


class TestAnderson:
    def test_accelerates_linear_map(self):
        # x <- 0.9 x + 1 has fixed point 10; Anderson should land in
        # far fewer steps than the plain iteration
        acc = AndersonAccelerator(depth=5)
        x = 0.0
        for i in range(12):
            gx = 0.9 * x + 1.0
            x = float(acc.step(x, gx)[0])
            if abs(x - 10.0) < 1e-12:
                break
        assert abs(x - 10.0) < 1e-9

    def test_vector_map(self):
        mat = np.array([[0.5, 0.2], [-0.1, 0.7]])
        const = np.array([1.0, -0.5])
        target = np.linalg.solve(np.eye(2) - mat, const)
        acc = AndersonAccelerator(depth=5)
        x = np.zeros(2)
        for _ in range(20):
            x = acc.step(x, mat @ x + const)
        assert np.allclose(x, target, atol=1e-10)


class TestSolvePoint:
    def test_far_detuned(self):
        p, t, th = fig3_setup()
        drive = DriveCondition(f_probe=p.f_r0 * (1 + 5e-3), p_s=dbm(-120))
        pt = solve_point(None, drive, p, t, th)
        assert abs(pt.s11) > 1.0 - 1e-5
        assert pt.temperature == pytest.approx(th.t0, rel=1e-4)
        assert pt.p_d <= 1e-6 * drive.p_s

    def test_cold_dip_is_sub_db(self):
        # strongly under-coupled device: vanishing-power dip 2 Q_min/Q_e
        p, t, th = fig2_setup(t0=0.025)
        pt = solve_point(0.0, DriveCondition(f_probe=p.f_r0, p_s=dbm(-170)),
                         p, t, th)
        depth_db = -20.0 * math.log10(abs(pt.s11))
        assert depth_db < 1.0
        expected = 2.0 * pt.q_total / p.q_e
        assert 1.0 - abs(pt.s11) == pytest.approx(expected, rel=1e-3)

    def test_energy_conservation_identities(self):
        p, t, th = fig3_setup()
        omega0 = 2 * math.pi * p.f_r0
        for psd, x0 in [(-140, 0.0), (-125, 0.0), (-110, 0.0),
                        (-125, 2e-7), (-100, -1e-6)]:
            pt = solve_point(x0, DriveCondition(f_probe=p.f_r0,
                                                p_s=dbm(psd)), p, t, th)
            ps = dbm(psd)
            assert abs(pt.p_d - (1 - abs(pt.s11) ** 2) * ps) \
                <= 1e-9 * max(pt.p_d, 1e-300)
            assert abs(pt.nbar - pt.q_i * pt.p_d / (HBAR * omega0 ** 2)) \
                <= 1e-9 * max(pt.nbar, 1e-300)

    def test_selfconsistency_residuals(self):
        p, t, th = fig3_setup()
        s = SolverSettings()
        for psd in (-140, -125, -110):
            drive0 = DriveCondition(f_probe=p.f_r0, p_s=dbm(psd))
            pt = solve_point(0.0, drive0, p, t, th)
            f_probe = pt.f_r * (1.0 + pt.x_detuning)
            st = _evaluate(replace(drive0, f_probe=f_probe), p, t, th, None,
                           s, pt.x_detuning, pt.temperature)
            assert abs(st["x_next"] - pt.x_detuning) <= s.eps_x
            assert abs(st["T_next"] - pt.temperature) \
                <= 1e-9 * pt.temperature

    def test_anderson_equals_damped(self):
        p, t, th = fig3_setup()
        for psd in (-140, -130, -120, -105):
            drive = DriveCondition(f_probe=p.f_r0, p_s=dbm(psd))
            a = solve_point(0.0, drive, p, t, th,
                            settings=SolverSettings(accel="anderson"))
            b = solve_point(0.0, drive, p, t, th,
                            settings=SolverSettings(accel="damped"))
            assert abs(a.x_detuning - b.x_detuning) <= 1e-7

    def test_monotone_in_power(self):
        p, t, th = fig3_setup()
        ps = [dbm(x) for x in np.linspace(-150, -95, 56)]
        sw = sweep_power(ps, None, p, t, th, x0_applied=0.0)
        temps = [q.temperature for q in sw.points]
        nbars = [q.nbar for q in sw.points]
        assert all(b >= a for a, b in zip(temps, temps[1:]))
        assert all(b >= a for a, b in zip(nbars, nbars[1:]))

    def test_invariant_validation(self):
        p, t, th = fig3_setup()
        pt = solve_point(0.0, DriveCondition(f_probe=p.f_r0, p_s=dbm(-120)),
                         p, t, th)
        assert 0.0 <= pt.alpha_sat <= 1.0
        assert abs(pt.s11) <= 1.0 + 1e-9
        assert pt.p_d >= 0.0
        assert pt.temperature >= th.t0 - 1e-12
        assert pt.converged


class TestPowerSweepShape:
    # regression snapshot of the fixed-frequency power response
    # (temperature K, occupancy, internal Q, fractional detuning)
    SNAPSHOT = {
        -160.0: (0.025000429192333803, 1.015740862882419,
                 180975.60868122466, -7.3999209261241665e-06),
        -140.0: (0.025052687693854683, 155.0886691959498,
                 224427.28410687367, -0.0011223011056046347),
        -125.0: (0.02813595391404435, 225447.8618866435,
                 4614324.241129273, -0.9952827797886324),
        -110.0: (0.03276164252415287, 1518847.5163506647,
                 9794670.950171249, -3.8684027530704186),
        -90.0: (0.0518079811855502, 17284584.86190055,
                13240210.109044423, -13.480863584751765),
    }

    def test_snapshot_and_quality_maximum(self):
        p, t, th = fig3_setup()
        dbms = np.linspace(-160, -90, 71)
        ps = [dbm(x) for x in dbms]
        sw = sweep_power(ps, None, p, t, th, x0_applied=0.0)
        by_dbm = dict(zip(dbms, sw.points))
        for key, (T, nb, qi, y) in self.SNAPSHOT.items():
            pt = by_dbm[key]
            assert pt.temperature == pytest.approx(T, rel=1e-8)
            assert pt.nbar == pytest.approx(nb, rel=1e-7)
            assert pt.q_i == pytest.approx(qi, rel=1e-7)
            assert pt.y_fractional == pytest.approx(y, rel=1e-6, abs=1e-9)
        qi_all = np.array([q.q_i for q in sw.points])
        imax = int(np.argmax(qi_all))
        assert -110.0 <= dbms[imax] <= -94.0
        assert 5e6 <= qi_all[imax] <= 3e7
        assert qi_all[-1] < qi_all[imax]  # declines past the maximum


class TestSweepFrequency:
    def test_linear_regime_direction_independent(self):
        p, t, th = fig3_setup()
        f_cold = p.f_r0 + delta_fr(th.t0, p, t)
        q_cold = 2e5
        span = 60 * f_cold / q_cold
        grid = np.linspace(f_cold - span / 2, f_cold + span / 2, 101)
        up = sweep_frequency(grid, DriveCondition(
            f_probe=f_cold, p_s=dbm(-165), direction="up"), p, t, th)
        dn = sweep_frequency(grid[::-1], DriveCondition(
            f_probe=f_cold, p_s=dbm(-165), direction="down"), p, t, th)
        su = np.abs(up.s11_values())
        sd = np.abs(dn.s11_values())[::-1]
        assert np.max(np.abs(su - sd)) < 1e-9
        assert up.jump_indices == [] and dn.jump_indices == []

    def test_hysteresis_at_high_power(self):
        p, t, th = fig2_setup(t0=0.050)
        dt = FIG2.discrete
        f_cold = p.f_r0 + delta_fr(th.t0, p, t)
        f_cold += discrete_tls_shift(0.0, th.t0, f_cold, dt) / (2 * math.pi)
        span = 100e3
        grid = np.linspace(f_cold - span / 2, f_cold + span / 2, 2001)
        drive = DriveCondition(f_probe=f_cold, p_s=dbm(-109),
                               direction="up")
        up = sweep_frequency(grid, drive, p, t, th, dt=dt)
        dn = sweep_frequency(grid[::-1], replace(drive, direction="down"),
                             p, t, th, dt=dt)
        assert up.jump_indices and dn.jump_indices
        yu = np.array(up.y_values())
        yd = np.array(dn.y_values())[::-1]
        assert np.any(np.abs(yu - yd) > 0.3)  # distinct branches
        # jump frequencies differ between directions
        f_up = grid[up.jump_indices[0]]
        f_dn = grid[::-1][dn.jump_indices[0]]
        assert abs(f_up - f_dn) > 75.0

    def test_low_power_no_hysteresis_outside_window(self):
        p, t, th = fig3_setup()
        f_cold = p.f_r0 + delta_fr(th.t0, p, t)
        span = 80 * f_cold / 2e5
        grid = np.linspace(f_cold - span / 2, f_cold + span / 2, 201)
        up = sweep_frequency(grid, DriveCondition(
            f_probe=f_cold, p_s=dbm(-140), direction="up"), p, t, th)
        dn = sweep_frequency(grid[::-1], DriveCondition(
            f_probe=f_cold, p_s=dbm(-140), direction="down"), p, t, th)
        yu = np.array(up.y_values())
        yd = np.array(dn.y_values())[::-1]
        assert np.max(np.abs(yu - yd)) < 1e-8

    def test_far_start_enforced(self):
        p, t, th = fig3_setup()
        f_cold = p.f_r0 + delta_fr(th.t0, p, t)
        grid = np.linspace(f_cold - 1e3, f_cold + 1e3, 21)
        with pytest.raises(ValueError, match="linewidths"):
            sweep_frequency(grid, DriveCondition(
                f_probe=f_cold, p_s=dbm(-130), direction="up"), p, t, th)

    def test_log_power_growth_of_resonance(self):
        # up-sweep resonance frequency grows about linearly per power
        # decade at high power
        p, t, th = fig2_setup(t0=0.050)
        shifts = []
        for psd in (-115.0, -110.0, -105.0):
            f_cold = p.f_r0 + delta_fr(th.t0, p, t)
            span = 200e3
            grid = np.linspace(f_cold - span / 2, f_cold + span / 2, 801)
            up = sweep_frequency(grid, DriveCondition(
                f_probe=f_cold, p_s=dbm(psd), direction="up"), p, t, th)
            shifts.append(up.min_s11_frequency() - f_cold)
        d1 = shifts[1] - shifts[0]
        d2 = shifts[2] - shifts[1]
        assert d1 > 0 and d2 > 0
        assert 0.5 <= d2 / d1 <= 1.5  # log-like, not linear (ratio 10)


class TestDiscreteTls:
    DT = DiscreteTlsParams(omega_tls_over_2pi=546e6, g_over_2pi=230e3)

    def test_critical_occupancy(self):
        p, t, th = fig2_setup(t0=0.025)
        f_r = p.f_r0 + delta_fr(th.t0, p, t)
        n_c = discrete_tls_ncrit(f_r, self.DT)
        assert n_c == pytest.approx(3100.0, rel=0.05)

    def test_large_occupancy_suppression(self):
        f_r = 520.81e6
        n_c = discrete_tls_ncrit(f_r, self.DT)
        chi0 = discrete_tls_shift(0.0, 0.025, f_r, self.DT)
        assert abs(discrete_tls_shift(1e6 * n_c, 0.025, f_r, self.DT)) \
            < 0.06 * abs(chi0)

    def test_high_temperature_suppression(self):
        f_r = 520.81e6
        hot = discrete_tls_shift(0.0, 1e3, f_r, self.DT)
        cold = discrete_tls_shift(0.0, 0.025, f_r, self.DT)
        assert abs(hot) < 1e-3 * abs(cold)

    def test_shift_sign(self):
        # TLS above the resonance pulls it down
        assert discrete_tls_shift(0.0, 0.025, 520.81e6, self.DT) < 0.0


class TestDcm:
    def test_round_trip_phi_zero(self):
        q_e = 7.45e6
        for q in (1e5, 1e6, 3e6):
            s = 1.0 - 2.0 * q / q_e
            q_minus, _ = dcm_q_from_depth(s, 0.0, q_e)
            assert q_minus == pytest.approx(q, rel=1e-12)

    def test_max_depth_and_critical_q(self):
        phi = -0.18
        q_e = 520.808275e6 / 69.9
        assert dcm_max_depth_db(phi) == pytest.approx(-15.0, abs=0.5)
        q_c = 0.5 * q_e * math.cos(phi) ** 2
        assert q_c == pytest.approx(3.6e6, rel=0.03)

    def test_depth_floor_enforced(self):
        with pytest.raises(ValueError):
            dcm_q_from_depth(0.1, -0.18, 1e7)

    def test_uncertainty_diverges_at_unity(self):
        assert dcm_q_uncertainty(0.5, 0.01) == pytest.approx(0.02)
        assert dcm_q_uncertainty(0.999, 0.01) > 5.0

    def test_rotated_sweep_runs(self):
        p, t, th = fig3_setup()
        pt = solve_point(0.0, DriveCondition(f_probe=p.f_r0, p_s=dbm(-130)),
                         p, t, th, dcm=DcmParams(phi_rot=-0.18))
        assert pt.converged
        assert pt.s11.imag != 0.0


def test_detect_jumps_merges_clusters():
    y = [0.0, 0.01, 0.02, 2.0, 4.0, 4.01, 4.02]
    jumps = detect_jumps(y, abs_floor=0.3, rel_factor=8.0)
    assert jumps == [3]
