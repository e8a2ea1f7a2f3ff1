"""Physical constants used across the package (SI units)."""

from scipy.constants import c as SPEED_OF_LIGHT  # m/s
from scipy.constants import epsilon_0 as VACUUM_PERMITTIVITY  # F/m
from scipy.constants import hbar as HBAR  # J*s

# Dipole-moment ingestion constant, C*m per Debye.
DEBYE = 3.33564e-30

__all__ = ["SPEED_OF_LIGHT", "VACUUM_PERMITTIVITY", "HBAR", "DEBYE"]
