import math

import pytest

from tlsim.params import ResonatorParams, ThermalParams, TlsEnsembleParams
from tlsim.presets import get_preset


def dbm(value: float) -> float:
    return 1e-3 * 10.0 ** (value / 10.0)


def to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts / 1e-3)


@pytest.fixture(scope="session")
def fig2():
    return get_preset("fig2")


@pytest.fixture(scope="session")
def fig3():
    return get_preset("fig3")


@pytest.fixture(scope="session")
def phase_preset():
    return get_preset("phase")
