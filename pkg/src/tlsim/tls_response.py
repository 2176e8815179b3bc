"""Equilibrium response of the TLS bath.

Frequency pull of the dispersively coupled continuum, saturable resonant
loss, relaxation loss, the temperature coefficient of frequency (TCF) and
its sign-change (crossover) temperature.

The tanh and digamma arguments use the zero-temperature resonance f_r0
throughout; replacing it with the shifted f_r(T) changes results at the
O(F*delta_0) ~ 1e-5 relative level only.
"""

from __future__ import annotations

import math

from scipy.optimize import brentq

from .params import BOLTZMANN_K, PLANCK_H, ResonatorParams, TlsEnsembleParams
from .specfun import digamma_half_line, trigamma_half_line


def _check_temperature(T: float) -> None:
    if not (T > 0):
        raise ValueError(f"temperature must be positive, got {T!r}")


def reduced_argument(f_r: float, T: float) -> float:
    """b = h f_r / (2 pi k_B T), the digamma-line coordinate."""
    return PLANCK_H * f_r / (2.0 * math.pi * BOLTZMANN_K * T)


def half_quantum_ratio(f_r: float, T: float) -> float:
    """eps = h f_r / (2 k_B T), the tanh argument."""
    return PLANCK_H * f_r / (2.0 * BOLTZMANN_K * T)


def delta_fr(T: float, p: ResonatorParams, t: TlsEnsembleParams) -> float:
    """Frequency shift f_r(T) - f_r0 in Hz from the TLS continuum.

    Vanishes as T -> 0 and grows like (fd0_reac/pi) f_r0 ln T at high
    temperature.
    """
    _check_temperature(T)
    if t.fd0_reac == 0.0:
        return 0.0
    b = reduced_argument(p.f_r0, T)
    # Re Psi(1/2 + h f/(2 pi i k T)) = Re Psi(1/2 + i b) by even symmetry
    re_psi = digamma_half_line(b).re_psi
    return p.f_r0 * (t.fd0_reac / math.pi) * (re_psi - math.log(b))


def q_res_inv(T: float, nbar: float, p: ResonatorParams,
              t: TlsEnsembleParams) -> float:
    """Saturable loss of the near-resonant TLS subset, 1/Q_res."""
    _check_temperature(T)
    if nbar < 0:
        raise ValueError(f"nbar must be >= 0, got {nbar!r}")
    th = math.tanh(half_quantum_ratio(p.f_r0, T))
    return t.fd0_diss * th / math.sqrt(1.0 + (nbar / t.n_s) ** t.beta * th)


def q_rel_inv(T: float, t: TlsEnsembleParams) -> float:
    """Relaxation-damping loss 1/Q_rel = (T / 0.5 K)^d / q_rel_ref."""
    _check_temperature(T)
    if math.isinf(t.q_rel_ref):
        return 0.0
    return (T / TlsEnsembleParams.T_REL_REF) ** t.d_exp / t.q_rel_ref


def q_i_inv(T: float, nbar: float, p: ResonatorParams,
            t: TlsEnsembleParams) -> float:
    """Total internal loss: resonant + relaxation + background."""
    bkg = 0.0 if math.isinf(p.q_bkg) else 1.0 / p.q_bkg
    return q_res_inv(T, nbar, p, t) + q_rel_inv(T, t) + bkg


def tcf(T0: float, p: ResonatorParams, t: TlsEnsembleParams) -> float:
    """Temperature coefficient of frequency, (1/f_r) d(delta_fr)/dT in 1/K.

    Negative (softening) below the crossover temperature, positive
    (hardening) above, decaying like fd0_reac/(pi T0) at high T0.
    """
    _check_temperature(T0)
    b = reduced_argument(p.f_r0, T0)
    # Im Psi'(1/2 + h f/(2 pi i k T)) = Im Psi'(1/2 - i b)
    im_tri = trigamma_half_line(-b).imag
    return (t.fd0_reac / math.pi) * (1.0 / T0 - (b / T0) * im_tri)


def _tcf_bracket(T: float, f_r0: float) -> float:
    # TCF with the fd0_reac/pi prefactor stripped; same root
    b = reduced_argument(f_r0, T)
    return 1.0 - b * trigamma_half_line(-b).imag


def crossover_temperature(p: ResonatorParams) -> float:
    """Temperature T_c at which the TCF changes sign.

    Satisfies k_B T_c / (h f_r0) = 0.4408 and scales linearly with f_r0."""
    scale = PLANCK_H * p.f_r0 / BOLTZMANN_K
    return brentq(_tcf_bracket, 0.1 * scale, 1.0 * scale,
                  args=(p.f_r0,), xtol=1e-18, rtol=1e-14)


def elevated_temperature(t0: float, t_sat: float) -> float:
    """Optional input transform T0' = sqrt(T0^2 + t_sat^2) used to model
    resonant TLSs inside a phonon bandgap that fail to thermalize below
    t_sat."""
    return math.hypot(t0, t_sat)
