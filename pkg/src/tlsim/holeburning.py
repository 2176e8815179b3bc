"""Resonant spectral-hole-burning response of a flat, non-interacting TLS
ensemble probed by a single tone.

The probe saturates a spectral slice of width Gamma_2^eff around its own
frequency; the resulting population imbalance pulls the cavity by an
amount antisymmetric in the probe detuning and narrows the absorption.
This mechanism is deliberately kept separate from the thermal solver: its
predicted pull is orders of magnitude below the heating-induced shift at
matched drive powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import HBAR, OperatingPoint, ResonatorParams, SweepDirection, SweepResult
from .tls_response import half_quantum_ratio

MAX_ITERATIONS = 500
OMEGA_TOL = 1e-3   # rad/s, convergence of the self-consistent pull


@dataclass(frozen=True)
class HoleburnParams:
    """Uniformly coupled TLS ensemble parameters.

    gamma0 is the maximal TLS-induced cavity damping (rad/s), kappa_i0 the
    background internal loss (rad/s) and kappa_e the external coupling
    (rad/s).  The intrinsic TLS linewidth follows as
    Gamma_2 = sqrt(2 g^2 n_s).
    """

    g_over_2pi: float    # Hz
    n_s: float
    gamma0: float        # rad/s
    kappa_i0: float      # rad/s
    kappa_e: float       # rad/s

    def __post_init__(self) -> None:
        if min(self.g_over_2pi, self.n_s, self.gamma0, self.kappa_i0,
               self.kappa_e) <= 0:
            raise ValueError("all hole-burning parameters must be positive")

    @property
    def gamma2(self) -> float:
        """Intrinsic TLS linewidth sqrt(2 g^2 n_s), rad/s."""
        g = 2.0 * math.pi * self.g_over_2pi
        return math.sqrt(2.0 * g * g * self.n_s)


def gamma0_from_loss_tangent(f_r: float, fd0: float, T: float) -> float:
    """Maximal TLS cavity damping w_r * F d0 * tanh(h f_r/(2 k_B T))."""
    return 2.0 * math.pi * f_r * fd0 * math.tanh(half_quantum_ratio(f_r, T))


def holeburn_response(delta: float, nbar: float, hp: HoleburnParams
                      ) -> tuple[float, float]:
    """Cavity pull and internal loss (rad/s) at probe detuning ``delta``.

    The pull is odd in delta and vanishes on resonance; the loss reduces to
    kappa_i0 + gamma0/sqrt(1 + nbar/n_s) at small detuning.
    """
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    s = nbar / hp.n_s
    root = math.sqrt(1.0 + s)
    d = delta / hp.gamma2
    denom = d * d + (1.0 + root) ** 2
    d_omega = -0.5 * hp.gamma0 * d * s / (root * denom)
    kappa_i = hp.kappa_i0 + hp.gamma0 * (1.0 - s / root * (1.0 + root) / denom)
    return d_omega, kappa_i


def hole_width(nbar: float, hp: HoleburnParams) -> float:
    """Effective width Gamma_2 sqrt(1 + nbar/n_s) of the burnt hole, rad/s."""
    return hp.gamma2 * math.sqrt(1.0 + nbar / hp.n_s)


def critical_power(hp: HoleburnParams, omega_r: float) -> float:
    """Probe power (W) at which the hole width can reach the detuning where
    the pull is maximal: (hbar w_r/kappa_e) * 2 g^2 n_s^2."""
    g = 2.0 * math.pi * hp.g_over_2pi
    return HBAR * omega_r / hp.kappa_e * 2.0 * g * g * hp.n_s ** 2


def max_pull(hp: HoleburnParams) -> float:
    """Largest attainable cavity pull gamma0/4, rad/s."""
    return hp.gamma0 / 4.0


def holeburn_selfconsistent(f_grid, p_s: float, hp: HoleburnParams,
                            resonator: ResonatorParams) -> SweepResult:
    """Self-consistent swept response over absolute probe frequencies.

    Per point: seed the cavity at its bare frequency with unsaturated loss,
    then repeat (phonon number from the Lorentzian) -> (pull, loss) ->
    (shift referenced to the bare frequency) until the pull update falls
    below OMEGA_TOL.  Grid points are independent; the response is
    single-valued.
    """
    if p_s < 0:
        raise ValueError("p_s must be >= 0")
    omega_r0 = resonator.omega_r0
    points: list[OperatingPoint] = []
    for f in f_grid:
        omega = 2.0 * math.pi * f
        d_omega = 0.0
        kappa_i = hp.kappa_i0 + hp.gamma0
        nbar = 0.0
        converged = False
        iterations = 0
        for iterations in range(1, MAX_ITERATIONS + 1):
            omega_r = omega_r0 + d_omega
            delta = omega - omega_r
            kappa = kappa_i + hp.kappa_e
            nbar = hp.kappa_e / (delta * delta + 0.25 * kappa * kappa) \
                * p_s / (HBAR * omega_r)
            d_omega_new, kappa_i_new = holeburn_response(delta, nbar, hp)
            if abs(d_omega_new - d_omega) <= OMEGA_TOL:
                d_omega, kappa_i = d_omega_new, kappa_i_new
                converged = True
                break
            d_omega, kappa_i = d_omega_new, kappa_i_new
        omega_r = omega_r0 + d_omega
        delta = omega - omega_r
        kappa = kappa_i + hp.kappa_e
        s11 = 1.0 - hp.kappa_e / (1.0j * delta + 0.5 * kappa)
        f_r = omega_r / (2.0 * math.pi)
        x = (f - f_r) / f_r
        q_total = omega_r / kappa
        points.append(OperatingPoint(
            temperature=float("nan"), nbar=nbar, q_i=omega_r / kappa_i,
            q_total=q_total, f_r=f_r, x_detuning=x,
            y_fractional=q_total * x, s11=s11,
            p_d=(1.0 - abs(s11) ** 2) * p_s,
            alpha_sat=1.0 - 1.0 / math.sqrt(1.0 + nbar / hp.n_s),
            iterations=iterations, converged=converged))
    return SweepResult(points=points, direction=SweepDirection.FIXED,
                       p_s=p_s)
