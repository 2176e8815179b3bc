"""Simulator for the mixed reactive-dissipative nonlinear response of a
microwave-probed mechanical resonator coupled to a heated two-level-system
(TLS) bath.

The package provides:

* equilibrium TLS frequency pull and loss (``tls_response``),
* power-to-temperature thermal models, including a ballistic beam
  conductance calculator (``thermal``),
* the non-perturbative self-consistent steady-state solver with Anderson
  acceleration (``steady_solver``),
* closed-form first-order bifurcation models (``perturbative``),
* coupled temperature/phonon-number time-domain dynamics (``dynamics``),
* the resonant spectral-hole-burning model (``holeburning``),
* grid studies over power and TLS density or coupling (``phase_diagram``),
* a batch CLI front end (``cli``).

All library APIs use SI units: hertz, kelvin, watts, seconds.  dBm and mK
conversions happen only at the CLI boundary.
"""

from .params import (
    BeamGeometry,
    DcmParams,
    DiscreteTlsParams,
    DriveCondition,
    OperatingPoint,
    ResonatorParams,
    SweepResult,
    ThermalParams,
    ThreeNodeParams,
    TlsEnsembleParams,
)

__version__ = "0.1.0"

__all__ = [
    "BeamGeometry",
    "DcmParams",
    "DiscreteTlsParams",
    "DriveCondition",
    "OperatingPoint",
    "ResonatorParams",
    "SweepResult",
    "ThermalParams",
    "ThreeNodeParams",
    "TlsEnsembleParams",
    "__version__",
]
