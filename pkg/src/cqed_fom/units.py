"""Unit helpers.

All rates and detunings inside the package are angular frequencies in
rad/s. Spectroscopic inputs are quoted in cycle frequency (GHz, MHz),
so the converters below multiply by 2*pi. Lengths are SI metres, dipole
moments SI C*m.
"""

import math

from .constants import DEBYE

TWO_PI = 2.0 * math.pi


def ghz(value: float) -> float:
    """Cycle frequency in GHz -> angular rate in rad/s."""
    return TWO_PI * value * 1e9


def mhz(value: float) -> float:
    """Cycle frequency in MHz -> angular rate in rad/s."""
    return TWO_PI * value * 1e6


def to_ghz(value: float) -> float:
    """Angular rate in rad/s -> cycle frequency in GHz."""
    return value / TWO_PI / 1e9


def debye(value: float) -> float:
    """Dipole moment in Debye -> C*m."""
    return value * DEBYE


def nm(value: float) -> float:
    """Length in nanometres -> metres."""
    return value * 1e-9


# unit tag -> converter to internal units, used by the config reader
FREQUENCY_UNITS = {
    "Hz": lambda v: TWO_PI * v,
    "kHz": lambda v: TWO_PI * v * 1e3,
    "MHz": lambda v: TWO_PI * v * 1e6,
    "GHz": lambda v: TWO_PI * v * 1e9,
    "THz": lambda v: TWO_PI * v * 1e12,
    "rad/s": lambda v: v,
}

LENGTH_UNITS = {
    "m": lambda v: v,
    "um": lambda v: v * 1e-6,
    "nm": lambda v: v * 1e-9,
}

DIPOLE_UNITS = {
    "Debye": lambda v: v * DEBYE,
    "C*m": lambda v: v,
}

VOLUME_UNITS = {
    "m3": lambda v: v,
    "um3": lambda v: v * 1e-18,
    "nm3": lambda v: v * 1e-27,
    # (lambda/n)^3 is handled separately: it needs the wavelength context
    "lambda_n3": None,
}

__all__ = [
    "TWO_PI",
    "ghz",
    "mhz",
    "to_ghz",
    "debye",
    "nm",
    "FREQUENCY_UNITS",
    "LENGTH_UNITS",
    "DIPOLE_UNITS",
    "VOLUME_UNITS",
]
