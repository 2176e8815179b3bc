"""Parameter records and physical constants shared across the package.

All quantities are SI: frequencies in Hz, temperatures in K, powers in W,
rates in rad/s where noted.  Records are frozen dataclasses; they validate
their invariants on construction and raise ``ValueError`` on violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# CODATA 2018 exact values
PLANCK_H = 6.62607015e-34  # J s
HBAR = PLANCK_H / (2.0 * math.pi)  # J s
BOLTZMANN_K = 1.380649e-23  # J/K


class ConfigError(ValueError):
    """Invalid configuration or parameter record."""


class SolverError(RuntimeError):
    """A fixed-point iteration or integrator failed to converge."""

    def __init__(self, message: str, residual: float | None = None,
                 history: list[float] | None = None):
        super().__init__(message)
        self.residual = residual
        self.history = history or []


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class ResonatorParams:
    """Bare mechanical mode: zero-temperature frequency, external coupling
    and background (TLS-free) quality factor.

    ``q_bkg`` may be ``math.inf`` to switch the background loss channel off.
    """

    f_r0: float                 # Hz, zero-temperature resonance
    kappa_e_over_2pi: float     # Hz, external coupling rate / 2pi
    q_bkg: float = math.inf     # dimensionless

    def __post_init__(self) -> None:
        _require(self.f_r0 > 0, "f_r0 must be positive")
        _require(self.kappa_e_over_2pi > 0, "kappa_e_over_2pi must be positive")
        _require(self.q_bkg > 0, "q_bkg must be positive (may be inf)")

    @property
    def omega_r0(self) -> float:
        """Bare angular frequency, rad/s."""
        return 2.0 * math.pi * self.f_r0

    @property
    def q_e(self) -> float:
        """External quality factor f_r0 / (kappa_e/2pi)."""
        return self.f_r0 / self.kappa_e_over_2pi


@dataclass(frozen=True)
class TlsEnsembleParams:
    """Effective parameters of the TLS bath.

    ``fd0_reac`` and ``fd0_diss`` are the zero-temperature loss tangents of
    the dispersively coupled continuum and of the near-resonant subset.
    ``n_s`` is the critical phonon number for resonant-TLS saturation,
    ``beta`` the nonuniform-saturation exponent, and the relaxation channel
    is Q_rel(T) = q_rel_ref * (0.5 K / T)^d_exp.
    """

    fd0_reac: float
    fd0_diss: float
    n_s: float
    beta: float = 1.0
    q_rel_ref: float = math.inf   # Q_rel at the 0.5 K reference temperature
    d_exp: float = 1.0

    T_REL_REF = 0.5  # K, reference temperature of q_rel_ref

    def __post_init__(self) -> None:
        _require(self.fd0_reac >= 0, "fd0_reac must be >= 0")
        _require(self.fd0_diss >= 0, "fd0_diss must be >= 0")
        _require(self.n_s > 0, "n_s must be positive")
        _require(0.0 <= self.beta <= 1.0, "beta must lie in [0, 1]")
        _require(self.q_rel_ref > 0, "q_rel_ref must be positive (may be inf)")
        _require(self.d_exp > 0, "d_exp must be positive")


@dataclass(frozen=True)
class ThermalParams:
    """Power-law conductance model: G_th(T) = n_ch * g0(t0) * (T/t0)^gamma.

    ``c_th`` is only needed by the time-domain integrator; ``None`` selects
    a default heat capacity such that c_th / G_th(t0) = 100 us.
    """

    t0: float             # K, bath temperature
    n_ch: float           # conductance quanta at t0
    gamma: float          # temperature exponent
    c_th: float | None = None  # J/K, optional heat capacity

    def __post_init__(self) -> None:
        _require(self.t0 > 0, "t0 must be positive")
        _require(self.n_ch > 0, "n_ch must be positive")
        _require(self.gamma > -1, "gamma must exceed -1")
        if self.c_th is not None:
            _require(self.c_th > 0, "c_th must be positive")


@dataclass(frozen=True)
class ThreeNodeParams:
    """Lumped TLS / phonon / bath thermal network.

    Node 't' (heat capacity c_t) receives the dissipated power and couples
    to node 'p' (c_p) through r_tp; node 'p' couples to the bath at t0
    through r_pb.
    """

    c_t: float   # J/K
    c_p: float   # J/K
    r_tp: float  # K/W
    r_pb: float  # K/W
    t0: float    # K

    def __post_init__(self) -> None:
        for name in ("c_t", "c_p", "r_tp", "r_pb", "t0"):
            _require(getattr(self, name) > 0, f"{name} must be positive")

    @property
    def tau_tp(self) -> float:
        return self.r_tp * self.c_t

    @property
    def tau_pt(self) -> float:
        return self.r_tp * self.c_p

    @property
    def tau_pb(self) -> float:
        return self.r_pb * self.c_p


@dataclass(frozen=True)
class BeamGeometry:
    """Rectangular support beam for the ballistic conductance model.

    The phonon band (l, m) has cutoff omega_lm = pi*c*sqrt((l/w)^2+(m/t)^2).
    An optional hard bandgap window blocks transmission; when
    ``bandgap_is_halfwidth`` is True the window is |f - f_b| < df_b,
    otherwise |f - f_b| < df_b/2 (df_b read as the full spectral size).
    """

    width_w: float                      # m
    thickness_t: float                  # m
    speed_c: float                      # m/s
    bandgap_center_fb: float | None = None   # Hz
    bandgap_width_dfb: float | None = None   # Hz
    n_beams: int = 1
    bandgap_is_halfwidth: bool = True

    def __post_init__(self) -> None:
        _require(self.thickness_t > 0, "thickness must be positive")
        _require(self.width_w >= self.thickness_t, "width must be >= thickness")
        _require(self.speed_c > 0, "speed must be positive")
        _require(self.n_beams >= 1, "n_beams must be >= 1")
        if (self.bandgap_center_fb is None) != (self.bandgap_width_dfb is None):
            raise ValueError("bandgap center and width must be given together")
        if self.bandgap_width_dfb is not None:
            _require(self.bandgap_width_dfb < 2.0 * self.bandgap_center_fb,
                     "bandgap width must be < 2 * center frequency")

    def gap_window(self) -> tuple[float, float] | None:
        """Blocked frequency interval (f_lo, f_hi) in Hz, or None."""
        if self.bandgap_center_fb is None:
            return None
        half = self.bandgap_width_dfb
        if not self.bandgap_is_halfwidth:
            half = half / 2.0
        return (max(self.bandgap_center_fb - half, 0.0),
                self.bandgap_center_fb + half)


class SweepDirection:
    UP = "up"
    DOWN = "down"
    FIXED = "fixed"


@dataclass(frozen=True)
class DriveCondition:
    """Applied readout tone: probe frequency, power at the device, and the
    sweep direction the point belongs to."""

    f_probe: float    # Hz
    p_s: float        # W
    direction: str = SweepDirection.FIXED

    def __post_init__(self) -> None:
        _require(self.p_s >= 0, "p_s must be >= 0")
        _require(self.direction in (SweepDirection.UP, SweepDirection.DOWN,
                                    SweepDirection.FIXED),
                 "direction must be 'up', 'down' or 'fixed'")


@dataclass(frozen=True)
class DiscreteTlsParams:
    """A single strongly-coupled TLS treated in the dispersive limit."""

    omega_tls_over_2pi: float   # Hz
    g_over_2pi: float           # Hz

    def __post_init__(self) -> None:
        _require(self.omega_tls_over_2pi > 0, "omega_tls_over_2pi must be positive")
        _require(self.g_over_2pi > 0, "g_over_2pi must be positive")


@dataclass(frozen=True)
class DcmParams:
    """Diameter-correction rotation accounting for impedance mismatch."""

    phi_rot: float = 0.0   # rad

    def __post_init__(self) -> None:
        _require(abs(self.phi_rot) < math.pi / 2, "|phi_rot| must be < pi/2")


@dataclass(frozen=True)
class OperatingPoint:
    """Converged self-consistent state at one drive condition."""

    temperature: float      # K
    nbar: float
    q_i: float
    q_total: float
    f_r: float              # Hz, realized resonance frequency
    x_detuning: float       # (f - f_r)/f_r
    y_fractional: float     # q_total * x_detuning
    s11: complex
    p_d: float              # W
    alpha_sat: float
    iterations: int
    converged: bool

    def validate(self, t0: float, *, dcm_rotated: bool = False) -> None:
        """Check the state invariants.

        The reflection-magnitude and dissipated-power bounds only hold for
        the physical (unrotated) response; a finite DCM rotation is a
        readout-chain artifact and is exempted.
        """
        _require(0.0 <= self.alpha_sat <= 1.0, "alpha_sat out of [0, 1]")
        _require(self.temperature >= t0 - 1e-12, "temperature below bath")
        if not dcm_rotated:
            _require(abs(self.s11) <= 1.0 + 1e-9, "|S11| above unity")
            _require(self.p_d >= -1e-15, "negative dissipated power")


@dataclass
class SweepResult:
    """Ordered operating points along one sweep, plus jump bookkeeping."""

    points: list[OperatingPoint]
    direction: str
    p_s: float
    jump_indices: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    def frequencies(self) -> list[float]:
        return [pt.f_r * (1.0 + pt.x_detuning) for pt in self.points]

    def y_values(self) -> list[float]:
        return [pt.y_fractional for pt in self.points]

    def s11_values(self) -> list[complex]:
        return [pt.s11 for pt in self.points]

    def min_s11_frequency(self) -> float:
        """Probe frequency at which |S11| is smallest."""
        mags = [abs(pt.s11) for pt in self.points]
        i = mags.index(min(mags))
        return self.frequencies()[i]

    def y_crossing_frequency(self) -> float | None:
        """Probe frequency where the realized detuning y crosses zero,
        linearly interpolated between grid points; None if y never changes
        sign (the zero can be skipped over a jump discontinuity)."""
        f = self.frequencies()
        y = self.y_values()
        for i in range(1, len(y)):
            if i in self.jump_indices:
                continue
            if y[i - 1] == 0.0:
                return f[i - 1]
            if y[i - 1] * y[i] < 0.0:
                w = y[i - 1] / (y[i - 1] - y[i])
                return f[i - 1] + w * (f[i] - f[i - 1])
        if y and y[-1] == 0.0:
            return f[-1]
        return None
