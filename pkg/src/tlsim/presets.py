"""Named parameter presets for the two reference devices.

``fig2`` is the 520.81 MHz resonator characterized by swept-frequency
power/temperature series (includes a strongly coupled discrete TLS at
546 MHz); ``fig3`` is the 502.07 MHz resonator characterized by fixed-
frequency ringdown power sweeps.  ``phase`` is the fig3-based variant used
for the bistability phase-diagram study: background loss switched off and
a single loss tangent driving both response channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import (
    DiscreteTlsParams,
    ResonatorParams,
    ThermalParams,
    TlsEnsembleParams,
)


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    resonator: ResonatorParams
    tls: TlsEnsembleParams
    n_ch: float
    gamma: float
    discrete: DiscreteTlsParams | None = None

    def thermal(self, t0: float, c_th: float | None = None) -> ThermalParams:
        return ThermalParams(t0=t0, n_ch=self.n_ch, gamma=self.gamma,
                             c_th=c_th)


PRESETS: dict[str, Preset] = {
    "fig2": Preset(
        name="fig2",
        description="520.81 MHz device, swept-frequency series, "
                    "discrete TLS at 546 MHz",
        resonator=ResonatorParams(f_r0=520.808275e6,
                                  kappa_e_over_2pi=69.9, q_bkg=60e6),
        tls=TlsEnsembleParams(fd0_reac=1.42e-5, fd0_diss=1.61e-5,
                              n_s=94.2, beta=1.0, q_rel_ref=0.33e6,
                              d_exp=1.69),
        n_ch=0.37, gamma=2.83,
        discrete=DiscreteTlsParams(omega_tls_over_2pi=546e6,
                                   g_over_2pi=230e3),
    ),
    "fig3": Preset(
        name="fig3",
        description="502.07 MHz device, fixed-frequency ringdown series",
        resonator=ResonatorParams(f_r0=502.06550e6,
                                  kappa_e_over_2pi=42.1, q_bkg=60e6),
        tls=TlsEnsembleParams(fd0_reac=1.14e-5, fd0_diss=1.23e-5,
                              n_s=128.0, beta=1.0, q_rel_ref=0.36e6,
                              d_exp=1.84),
        n_ch=0.58, gamma=2.83,
    ),
    "phase": Preset(
        name="phase",
        description="fig3 variant for phase-diagram studies: no background "
                    "loss, single loss tangent on both channels",
        resonator=ResonatorParams(f_r0=502.06550e6,
                                  kappa_e_over_2pi=42.15, q_bkg=math.inf),
        tls=TlsEnsembleParams(fd0_reac=1.1395e-5, fd0_diss=1.1395e-5,
                              n_s=128.0, beta=1.0, q_rel_ref=0.36e6,
                              d_exp=1.84),
        n_ch=0.58, gamma=2.83,
    ),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; "
                       f"available: {', '.join(sorted(PRESETS))}") from None
