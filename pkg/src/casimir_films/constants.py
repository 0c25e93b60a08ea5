"""Unit conventions shared by the whole package.

Frequencies and energies are in eV, lengths in nm, temperatures in K and
pressures in Pa.  Every conversion goes through this table.
"""
from scipy import constants as _sc

#: hbar * c in eV nm (197.327 ...)
HBAR_C = _sc.hbar * _sc.c / _sc.e * 1e9

#: Boltzmann constant in eV / K (8.617e-5)
K_B = _sc.k / _sc.e

#: 1 eV / nm^3 expressed in Pa (1.602e8)
EV_PER_NM3_TO_PA = _sc.e * 1e27

#: speed of light in m / s, used to express Fermi velocities as fractions of c
C_LIGHT = _sc.c
