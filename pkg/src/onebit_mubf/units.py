"""dB / dBm / linear unit conversions. All internal math runs in linear Watts."""

from __future__ import annotations

import math

BOLTZMANN_NOISE_DBM_PER_HZ = -174.0


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def dbm_to_watt(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watt_to_dbm(p_watt: float) -> float:
    return 10.0 * math.log10(p_watt) + 30.0


def thermal_noise_dbm(bandwidth_hz: float, noise_figure_db: float = 0.0) -> float:
    """Thermal noise power over a bandwidth: -174 dBm/Hz + 10 log10(B) + NF."""
    return BOLTZMANN_NOISE_DBM_PER_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db
