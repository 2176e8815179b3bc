import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tlsim.params import ResonatorParams, ThermalParams, TlsEnsembleParams
from tlsim.perturbative import (
    A_CRITICAL,
    DuffingScales,
    SwensonProblem,
    bifurcation_factor,
    bifurcation_fd0_bound,
    critical_fractional_detuning,
    delta_t_from_y,
    duffing_a_star,
    duffing_scales,
    duffing_solve,
    has_bistable_window,
    jump_down_asymptote,
    jump_up_asymptote,
    real_roots,
    s11_from_y,
    swenson_a,
    swenson_a_from_depth,
    swenson_branch,
    swenson_fold_points,
    swenson_roots,
)
from tlsim.thermal import g_th
from tlsim.tls_response import tcf


def residual(y0, a, y):
    return ((4.0 * y - 4.0 * y0) * y + 1.0) * y - (y0 + a)


class TestRoots:
    def test_linear_regime_root(self):
        roots = swenson_roots(SwensonProblem(1.7, 0.0))
        reals = [r for r in roots if abs(r.imag) < 1e-12]
        assert any(abs(r.real - 1.7) < 1e-12 for r in reals)

    def test_bisection_oracle(self):
        # dense sign-change scan for a = -2, y0 = 0
        y0, a = 0.0, -2.0
        grid = np.linspace(-6.0, 6.0, 2_000_001)
        vals = residual(y0, a, grid)
        idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
        brackets = [(grid[i], grid[i + 1]) for i in idx]
        from scipy.optimize import brentq
        oracle = sorted(brentq(lambda y: residual(y0, a, y), lo, hi,
                               xtol=1e-14) for lo, hi in brackets)
        ours = sorted(real_roots(SwensonProblem(y0, a)))
        assert len(ours) == len(oracle)
        for u, v in zip(ours, oracle):
            assert u == pytest.approx(v, abs=1e-10)

    @settings(max_examples=500, deadline=None)
    @given(st.floats(min_value=-20, max_value=20),
           st.floats(min_value=-20, max_value=20))
    def test_residuals_random(self, y0, a):
        for y in swenson_roots(SwensonProblem(y0, a)):
            scale = max(1.0, abs(y0) ** 3, abs(a))
            assert abs(residual(y0, a, y)) <= 1e-12 * scale

    @settings(max_examples=300, deadline=None)
    @given(st.floats(min_value=-10, max_value=10),
           st.floats(min_value=-10, max_value=10))
    def test_real_count_is_one_or_three(self, y0, a):
        assert len(real_roots(SwensonProblem(y0, a))) in (1, 3)

    def test_three_real_window_iff_supercritical(self):
        for fac, expect in ((1.01, True), (0.99, False)):
            a = -A_CRITICAL * fac
            found = any(
                len(real_roots(SwensonProblem(y0, a))) == 3
                for y0 in np.linspace(0.70, 1.05, 30001))
            assert found == expect
            assert has_bistable_window(a) == expect


class TestBranch:
    def test_no_jumps_below_threshold(self):
        grid = np.linspace(-3, 3, 601)
        up, jup = swenson_branch(grid, -0.5, "up")
        dn, jdn = swenson_branch(grid[::-1], -0.5, "down")
        assert jup == [] and jdn == []
        assert np.allclose(up, dn[::-1], atol=1e-12)

    def test_branch_satisfies_equation(self):
        grid = np.linspace(-3, 4, 1401)
        ys, _ = swenson_branch(grid, -2.0, "up")
        for y0, y in zip(grid, ys):
            assert abs(y - y0 + (-2.0) / (1 + 4 * y * y) + 0.0) <= 1e-10 \
                or abs(residual(y0, -2.0, y)) <= 1e-10

    def test_up_zero_crossing_at_minus_a(self):
        a = -2.0
        grid = np.linspace(-3, 4, 14001)
        ys, _ = swenson_branch(grid, a, "up")
        ys = np.asarray(ys)
        sign_change = np.nonzero(np.sign(ys[:-1]) != np.sign(ys[1:]))[0]
        crossing = grid[sign_change[0]]
        assert crossing == pytest.approx(-a, abs=1e-3)

    def test_coinciding_resonances_weak(self):
        # for |a| <= 1 both directions cross zero at y0 = -a
        a = -0.9
        grid = np.linspace(-3, 3, 12001)
        for direction, g in (("up", grid), ("down", grid[::-1])):
            ys, _ = swenson_branch(g, a, direction)
            ys = np.asarray(ys)
            s = np.nonzero(np.sign(ys[:-1]) != np.sign(ys[1:]))[0]
            assert g[s[0]] == pytest.approx(-a, abs=1e-3)

    def test_jump_grid_locations(self):
        a = -2.0
        lo, hi = swenson_fold_points(a)
        grid = np.linspace(-3, 4, 7001)
        _, jup = swenson_branch(grid, a, "up")
        assert len(jup) == 1
        assert grid[jup[0]] == pytest.approx(hi, abs=2 * (grid[1] - grid[0]))
        _, jdn = swenson_branch(grid[::-1], a, "down")
        assert len(jdn) == 1
        assert grid[::-1][jdn[0]] == pytest.approx(
            lo, abs=2 * (grid[1] - grid[0]))

    def test_softening_mirror(self):
        # y(y0; a) = -y(-y0; -a): an up sweep of the hardening problem is
        # the mirrored down sweep of the softening one, point by point
        grid = np.linspace(-4, 4, 8001)
        up_hard, jup = swenson_branch(grid, -2.0, "up")
        dn_soft, jdn = swenson_branch(grid[::-1], 2.0, "down")
        diff = np.abs(np.asarray(up_hard) + np.asarray(dn_soft))
        mask = np.ones(len(grid), dtype=bool)
        for j in list(jup) + list(jdn):
            mask[max(0, j - 2): j + 3] = False
        assert np.all(diff[mask] < 1e-9)

    def test_monotonicity_validation(self):
        with pytest.raises(ValueError):
            swenson_branch([0.0, 1.0, 0.5], -1.0, "up")
        with pytest.raises(ValueError):
            swenson_branch([0.0, 1.0], -1.0, "down")


class TestFoldAsymptotics:
    @pytest.mark.parametrize("a", [-1.5, -2.0, -4.0, -8.0, -20.0])
    def test_jump_up_series(self, a):
        _, hi = swenson_fold_points(a)
        approx = jump_up_asymptote(a)
        # truncation error bounded by the highest retained series term
        assert abs(hi - approx) <= 1.0 / (256.0 * abs(a) ** 3)

    @pytest.mark.parametrize("a", [-1.5, -2.0, -4.0, -8.0, -20.0])
    def test_jump_down_series(self, a):
        lo, _ = swenson_fold_points(a)
        three = jump_down_asymptote(a, n_terms=3)
        assert abs(lo - three) <= 1.0 / (48.0 * abs(a))
        four = jump_down_asymptote(a, n_terms=4)
        assert abs(lo - four) <= 7.0 / (864.0 * 2.0 ** (1.0 / 3.0)
                                        * abs(a) ** (5.0 / 3.0))

    def test_window_requires_supercritical(self):
        with pytest.raises(ValueError):
            swenson_fold_points(-0.5 * A_CRITICAL)


def test_critical_fractional_detuning():
    y_c = critical_fractional_detuning()
    # root of 4 y^3 + y + a_c = 0
    assert 4.0 * y_c ** 3 + y_c + A_CRITICAL == pytest.approx(0.0, abs=1e-14)
    assert y_c == pytest.approx(-0.4367, abs=1e-4)


class TestNonlinearityStrength:
    RES = ResonatorParams(f_r0=520.808275e6, kappa_e_over_2pi=69.9,
                          q_bkg=60e6)
    TLS = TlsEnsembleParams(fd0_reac=1.42e-5, fd0_diss=1.61e-5, n_s=94.2,
                            beta=1.0, q_rel_ref=0.33e6, d_exp=1.69)

    def test_zero_power(self):
        assert swenson_a(0.05, 1e5, 1e7, 1e5, 0.0, 1e13, 1e-4) == 0.0

    def test_sign_tracks_crossover(self):
        from tlsim.tls_response import crossover_temperature
        t_c = crossover_temperature(self.RES)
        r_th = 1e13
        below = swenson_a(t_c / 3, 1e5, 1e7, 1.1e5, 1e-16, r_th,
                          tcf(t_c / 3, self.RES, self.TLS))
        above = swenson_a(3 * t_c, 1e5, 1e7, 1.1e5, 1e-16, r_th,
                          tcf(3 * t_c, self.RES, self.TLS))
        assert below > 0  # softening
        assert above < 0  # hardening

    def test_depth_parametrization_identity(self):
        q_e = 1.19e7
        q = 0.17 * q_e
        q_i = 1.0 / (1.0 / q - 1.0 / q_e)
        a1 = swenson_a(0.025, q, q_e, q_i, 2e-16, 7.3e13, 9.7e-5)
        a2 = swenson_a_from_depth(0.025, q / q_e, q_e, 2e-16, 7.3e13,
                                  9.7e-5)
        assert a1 == pytest.approx(a2, rel=1e-12)


class TestDuffingScales:
    RES = ResonatorParams(f_r0=502.06550e6, kappa_e_over_2pi=42.1,
                          q_bkg=60e6)
    TLS = TlsEnsembleParams(fd0_reac=1.14e-5, fd0_diss=1.23e-5, n_s=128.0,
                            beta=1.0, q_rel_ref=0.36e6, d_exp=1.84)
    TH = ThermalParams(t0=0.025, n_ch=0.58, gamma=2.83)

    def test_scale_ratios(self):
        sc = duffing_scales(0.025, self.RES, self.TLS, self.TH)
        assert 0.5e-2 <= sc.t_d / sc.t_r <= 2e-2
        assert sc.n_star == pytest.approx(1.8e8, rel=1.0)  # factor 2
        assert -math.pi / 2 < sc.phi_nl < 0.0
        assert sc.t_star == pytest.approx(
            sc.t_d / math.sqrt(1.0 + (sc.t_d / sc.t_r) ** 2), rel=1e-12)

    def test_dissipative_channel_hierarchy(self):
        # T_d0/T_d1 ~ 1e-3 f(eps) with f <= 1/sqrt(2), so T_d ~ T_d0
        from tlsim.params import BOLTZMANN_K, HBAR
        from tlsim.tls_response import half_quantum_ratio
        T0 = 0.025
        eps = half_quantum_ratio(self.RES.f_r0, T0)
        r_th = 1.0 / g_th(self.TH)
        t_d0 = 16.0 * self.TLS.n_s * r_th * (BOLTZMANN_K * T0) ** 2 \
            * eps ** 2 / (HBAR * math.tanh(eps))
        sc = duffing_scales(T0, self.RES, self.TLS, self.TH)
        assert sc.t_d == pytest.approx(t_d0, rel=0.02)
        f_eps = eps ** 3 * (1 - math.tanh(eps) ** 2) / math.tanh(eps)
        assert f_eps <= 1.0 / math.sqrt(2.0) + 1e-12

    def test_reactive_limit_phi_zero(self):
        # make the dissipative scale huge: tiny loss tangent, huge n_s
        tls = TlsEnsembleParams(fd0_reac=1.14e-5, fd0_diss=1e-12,
                                n_s=1e12, beta=1.0)
        sc = duffing_scales(0.025, self.RES, tls, self.TH)
        assert sc.t_d / sc.t_r > 1e3
        assert sc.phi_nl == pytest.approx(0.0, abs=1e-3)
        assert sc.t_star == pytest.approx(sc.t_r, rel=1e-5)


class TestDuffingSolve:
    def test_reduces_to_swenson_at_phi_zero(self):
        sc = DuffingScales(t_r=100.0, t_d=1e6, t_star=100.0, n_star=1e8,
                           phi_nl=0.0)
        q_total, q_e = 1e5, 1e6
        for y0 in (-1.5, 0.0, 0.7, 2.0):
            k0, k, s11 = duffing_solve(y0, 0.3, sc, q_total, q_e, "up")
            assert k0 == pytest.approx(y0, rel=1e-12, abs=1e-12)
            # same cubic as the pure reactive model with a = -a_star
            ys, _ = swenson_branch([y0 - 1e-9, y0], -0.3, "up")
            assert k == pytest.approx(ys[-1], abs=1e-6)
        assert bifurcation_factor(0.0) == pytest.approx(1.0, rel=1e-12)

    def test_bifurcation_factor_diverges(self):
        assert bifurcation_factor(-math.pi / 6 + 1e-9) > 1e20
        assert bifurcation_factor(-math.pi / 6) > 1e40
        # switching condition phi > -pi/6 maps to t_d/t_r >= sqrt(3)
        phi = math.atan(math.sqrt(3.0)) - math.pi / 2.0
        assert phi == pytest.approx(-math.pi / 6.0, abs=1e-12)

    def test_loss_tangent_bound(self):
        bound = bifurcation_fd0_bound(0.05, 520e6, 0.4, 100.0)
        assert bound == pytest.approx(2.8e-3, rel=0.02)
        from tlsim.thermal import n_thermal
        assert n_thermal(0.05, 520e6) == pytest.approx(2.0, rel=0.01)

    def test_rejects_bad_phase(self):
        sc = DuffingScales(t_r=1.0, t_d=1.0, t_star=1.0, n_star=1.0,
                           phi_nl=-2.0)
        with pytest.raises(ValueError):
            duffing_solve(0.0, 0.1, sc, 1e5, 1e6)


class TestLinearizedHelpers:
    def test_far_detuned_limits(self):
        assert delta_t_from_y(1e6, 0.3, 1e-15, 1e13) < 1e-12 * 1e13 * 1e-15
        assert abs(s11_from_y(1e9, 0.3) - 1.0) < 1e-8

    def test_depth_prefactor_maximum(self):
        depths = np.linspace(0.0, 1.0, 101)
        vals = [delta_t_from_y(0.0, a, 1e-15, 1e13) for a in depths]
        assert depths[int(np.argmax(vals))] == pytest.approx(0.5, abs=0.01)

    def test_on_resonance_depth(self):
        assert s11_from_y(0.0, 0.25) == pytest.approx(0.5)

    def test_rejects_bad_depth(self):
        with pytest.raises(ValueError):
            delta_t_from_y(0.0, 1.5, 1e-15, 1e13)
