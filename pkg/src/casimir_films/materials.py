"""Dielectric response at imaginary frequencies.

Local materials (vacuum, dispersionless dielectrics, Drude metals) are
evaluated as ``epsilon(zeta)`` with ``zeta`` in eV.  The nonlocal
(Boltzmann) longitudinal and transverse functions of a Drude metal are
written in dimensionless variables, scaled by the metal's plasma frequency:

    Omega = zeta / omega_p,   Q = hbar c q / omega_p,
    gamma = omega_tau / omega_p,   H = omega_p h / (hbar c).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from .constants import HBAR_C

# below this the closed forms of f_l, f_t cancel catastrophically
_SERIES_SWITCH = 0.1
_N_SERIES = 12

_k = np.arange(1, _N_SERIES + 1)
# (v - arctan v) / v**3 = sum_k (-1)**(k+1) v**(2k-2) / (2k+1)
_G_COEF = ((-1.0) ** (_k + 1) / (2 * _k + 1))[::-1]
# f_t(v) = sum_k (-1)**(k+1) 3 v**(2k-2) / ((2k+1)(2k-1))
_FT_COEF = ((-1.0) ** (_k + 1) * 3.0 / ((2 * _k + 1) * (2 * _k - 1)))[::-1]


class DomainError(ValueError):
    """Raised when a response function is evaluated outside its domain."""


@dataclass(frozen=True)
class DrudeParams:
    """Drude parameters of a metal.

    omega_p, omega_tau in eV; v_F is the Fermi velocity as a fraction of c.
    """

    omega_p: float
    omega_tau: float
    v_F: float

    def __post_init__(self):
        if not self.omega_p > 0:
            raise DomainError(f"omega_p must be > 0, got {self.omega_p}")
        if not self.omega_tau >= 0:
            raise DomainError(f"omega_tau must be >= 0, got {self.omega_tau}")
        if not 0 <= self.v_F < 1:
            raise DomainError(f"v_F must lie in [0, 1), got {self.v_F}")

    @property
    def gamma(self) -> float:
        return self.omega_tau / self.omega_p


@dataclass(frozen=True)
class SurfaceScattering:
    """Diffuse surface scattering of a thin film (off unless ``enabled``)."""

    p: float = 1.0
    enabled: bool = False

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise DomainError(f"specularity p must lie in [0, 1], got {self.p}")


class StaticResponse(NamedTuple):
    """Leading behaviour of epsilon(i zeta) as zeta -> 0.

    epsilon ~ weight / zeta**order, and epsilon zeta**2 / (hbar c)**2 tends
    to ``k2_offset`` (1/nm^2).
    """

    order: int
    weight: float
    k2_offset: float


@dataclass(frozen=True)
class Vacuum:
    def epsilon(self, zeta, thickness=None):
        return np.ones_like(np.asarray(zeta, dtype=float))

    def static_response(self, thickness=None) -> StaticResponse:
        return StaticResponse(0, 1.0, 0.0)


@dataclass(frozen=True)
class ConstantDielectric:
    eps: float

    def __post_init__(self):
        if not (np.isfinite(self.eps) and self.eps >= 1):
            raise DomainError(f"dielectric constant must be real and >= 1, got {self.eps}")

    def epsilon(self, zeta, thickness=None):
        return np.full_like(np.asarray(zeta, dtype=float), self.eps)

    def static_response(self, thickness=None) -> StaticResponse:
        return StaticResponse(0, self.eps, 0.0)


@dataclass(frozen=True)
class Drude:
    params: DrudeParams
    surface: SurfaceScattering = field(default_factory=SurfaceScattering)

    def omega_tau_eff(self, thickness=None) -> float:
        """Bulk relaxation plus the diffuse-surface term when it applies."""
        tau = self.params.omega_tau
        if self.surface.enabled and thickness is not None and np.isfinite(thickness):
            tau += surface_relaxation(self.params.v_F, self.surface.p, thickness)
        return tau

    def epsilon(self, zeta, thickness=None):
        return drude_epsilon(self.params, zeta, thickness, self.surface)

    def static_response(self, thickness=None) -> StaticResponse:
        wp2 = self.params.omega_p**2
        tau = self.omega_tau_eff(thickness)
        if tau > 0:
            return StaticResponse(1, wp2 / tau, 0.0)
        return StaticResponse(2, wp2, wp2 / HBAR_C**2)


MaterialModel = Union[Vacuum, ConstantDielectric, Drude]


class DimensionlessPoint(NamedTuple):
    Omega: float
    Q: float
    gamma: float
    H: float


def surface_relaxation(v_F, p, h):
    """Fuchs-Sondheimer surface relaxation frequency in eV.

    ``v_F`` as a fraction of c, ``h`` in nm.  Only the diffusely reflected
    fraction ``1 - p`` of electrons contributes.
    """
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise DomainError("film thickness must be > 0")
    if not 0 <= p <= 1:
        raise DomainError(f"specularity p must lie in [0, 1], got {p}")
    return 3.0 / 8.0 * (1.0 - p) * v_F * HBAR_C / h


def drude_epsilon(params: DrudeParams, zeta, thickness=None, surface: SurfaceScattering | None = None):
    """Drude permittivity 1 + omega_p**2 / (zeta (zeta + omega_tau)) at i*zeta.

    zeta in eV, must be > 0; the zeta -> 0 limit belongs to the caller.
    """
    zeta = np.asarray(zeta, dtype=float)
    if np.any(zeta <= 0):
        raise DomainError("drude_epsilon needs zeta > 0")
    tau = params.omega_tau
    if surface is not None and surface.enabled and thickness is not None and np.isfinite(thickness):
        tau = tau + surface_relaxation(params.v_F, surface.p, thickness)
    return 1.0 + params.omega_p**2 / (zeta * (zeta + tau))


def boltzmann_v(Omega, gamma, n, H, Q, v_F):
    """Dimensionless argument v of the Boltzmann response for mode n."""
    k = np.sqrt((np.asarray(n) * np.pi / H) ** 2 + np.asarray(Q) ** 2)
    return v_F * k / (np.asarray(Omega) + gamma)


def _arctan_defect(v):
    """(v - arctan v) / v**3, accurate down to v = 0."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    small = v < _SERIES_SWITCH
    vs = v[small]
    out[small] = np.polyval(_G_COEF, vs * vs)
    vl = v[~small]
    out[~small] = (vl - np.arctan(vl)) / vl**3
    return out


def f_transverse(v):
    """Transverse Boltzmann factor f_t(v); f_t(0) = 1, f_t ~ 3 pi / (4 v)."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    small = v < _SERIES_SWITCH
    vs = v[small]
    out[small] = np.polyval(_FT_COEF, vs * vs)
    vl = v[~small]
    out[~small] = 1.5 / vl**3 * (-vl + (1.0 + vl * vl) * np.arctan(vl))
    return out


def f_longitudinal(v, gamma_over_Omega):
    """Longitudinal Boltzmann factor f_l(v); f_l(0) = 1.

    Written as 3 g / (1 + (gamma/Omega) v**2 g) with g = (v - arctan v)/v**3,
    which is algebraically identical to the usual ratio and has no 0/0.
    """
    v = np.asarray(v, dtype=float)
    g = _arctan_defect(v)
    return 3.0 * g / (1.0 + gamma_over_Omega * v * v * g)


def epsilon_transverse(Omega, gamma, v):
    Omega = np.asarray(Omega, dtype=float)
    return 1.0 + f_transverse(v) / (Omega * (Omega + gamma))


def epsilon_longitudinal(Omega, gamma, v):
    Omega = np.asarray(Omega, dtype=float)
    return 1.0 + f_longitudinal(v, gamma / Omega) / (Omega * (Omega + gamma))


def to_dimensionless(zeta, q, h, params: DrudeParams) -> DimensionlessPoint:
    """Scale (zeta [eV], q [1/nm], h [nm]) by the metal's plasma frequency."""
    wp = params.omega_p
    return DimensionlessPoint(zeta / wp, HBAR_C * q / wp, params.omega_tau / wp, wp * h / HBAR_C)


def from_dimensionless(point: DimensionlessPoint, params: DrudeParams):
    """Inverse of :func:`to_dimensionless`; returns (zeta, q, h)."""
    wp = params.omega_p
    return point.Omega * wp, point.Q * wp / HBAR_C, point.H * HBAR_C / wp
