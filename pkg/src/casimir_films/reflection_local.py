"""Local reflection coefficients at imaginary frequency.

Everything here depends on frequency only through epsilon(i zeta).  Inputs
are zeta in eV and the in-plane wave number q in 1/nm; both may be numpy
arrays and broadcast against each other.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import HBAR_C
from .materials import MaterialModel, Vacuum

# e^{-x} is treated as exactly zero beyond this
_EXP_CUTOFF = 700.0

POLARIZATIONS = ("s", "p")


def _check_pol(polarization):
    if polarization not in POLARIZATIONS:
        raise ValueError(f"polarization must be 's' or 'p', got {polarization!r}")


@dataclass(frozen=True)
class Layer:
    material: MaterialModel
    thickness: float  # nm

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError(f"layer thickness must be > 0 nm, got {self.thickness}")


@dataclass(frozen=True)
class LayerStack:
    """Layers listed from the vacuum gap downwards, over a semi-infinite substrate."""

    layers: tuple[Layer, ...]
    substrate: MaterialModel

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def top(self) -> MaterialModel:
        return self.layers[0].material if self.layers else self.substrate


def k_normal(material: MaterialModel, zeta, q, thickness=None):
    """Normal wave number sqrt(eps zeta^2 / (hbar c)^2 + q^2) in 1/nm."""
    zeta = np.asarray(zeta, dtype=float)
    q = np.asarray(q, dtype=float)
    eps = material.epsilon(zeta, thickness)
    return np.sqrt(eps * (zeta / HBAR_C) ** 2 + q * q)


def _interface(eps_m, k_m, eps_l, k_l, polarization):
    if polarization == "s":
        return (k_m - k_l) / (k_m + k_l)
    return (eps_l * k_m - eps_m * k_l) / (eps_l * k_m + eps_m * k_l)


def fresnel_interface(m: MaterialModel, l: MaterialModel, zeta, q, polarization, thickness_m=None, thickness_l=None):
    """Reflection amplitude r_ml of the boundary between media m and l."""
    _check_pol(polarization)
    zeta = np.asarray(zeta, dtype=float)
    eps_m = m.epsilon(zeta, thickness_m)
    eps_l = l.epsilon(zeta, thickness_l)
    k_m = np.sqrt(eps_m * (zeta / HBAR_C) ** 2 + np.asarray(q, dtype=float) ** 2)
    k_l = np.sqrt(eps_l * (zeta / HBAR_C) ** 2 + np.asarray(q, dtype=float) ** 2)
    return _interface(eps_m, k_m, eps_l, k_l, polarization)


def film_reflection(r01, r21, k1, h):
    """Reflection of a film of thickness h (nm) with normal wave number k1.

    ``r01`` is the vacuum/film amplitude, ``r21`` the substrate/film one.
    """
    x = 2.0 * np.asarray(k1, dtype=float) * h
    e = np.where(x > _EXP_CUTOFF, 0.0, np.exp(-np.minimum(x, _EXP_CUTOFF)))
    return (r01 - r21 * e) / (1.0 - r01 * r21 * e)


def _stack_media(stack: LayerStack):
    media = [(Vacuum(), None)]
    media += [(layer.material, layer.thickness) for layer in stack.layers]
    media.append((stack.substrate, None))
    return media


def _compose(stack, eps, k, polarization):
    # recursion from the substrate upwards; eps[i], k[i] describe medium i
    # with 0 = vacuum gap and -1 = substrate
    n = len(stack.layers)
    R = _interface(eps[n], k[n], eps[n + 1], k[n + 1], polarization)
    for i in range(n, 0, -1):
        r_above = _interface(eps[i - 1], k[i - 1], eps[i], k[i], polarization)
        R = film_reflection(r_above, -R, k[i], stack.layers[i - 1].thickness)
    return R


def stack_reflection(stack: LayerStack, zeta, q, polarization):
    """Reflection amplitude of a layered plate seen from the vacuum gap (zeta > 0)."""
    _check_pol(polarization)
    zeta = np.asarray(zeta, dtype=float)
    q = np.asarray(q, dtype=float)
    eps, k = [], []
    for material, thickness in _stack_media(stack):
        e = material.epsilon(zeta, thickness)
        eps.append(e)
        k.append(np.sqrt(e * (zeta / HBAR_C) ** 2 + q * q))
    return _compose(stack, eps, k, polarization)


def _static_interface(sm, km, sl, kl, polarization):
    if polarization == "s":
        return (km - kl) / (km + kl)
    if sl.order > sm.order:
        return np.ones_like(km)
    if sm.order > sl.order:
        return -np.ones_like(km)
    return (sl.weight * km - sm.weight * kl) / (sl.weight * km + sm.weight * kl)


def stack_reflection_static(stack: LayerStack, q, polarization):
    """zeta -> 0 limit of :func:`stack_reflection`, taken analytically.

    Metals with finite relaxation give epsilon -> infinity with
    epsilon zeta^2 -> 0, so the s amplitude vanishes and p tends to the
    perfect-conductor value.  The plasma model (omega_tau = 0) keeps a
    finite epsilon zeta^2 and a nonzero s amplitude.
    """
    _check_pol(polarization)
    q = np.asarray(q, dtype=float)
    static = [m.static_response(t) for m, t in _stack_media(stack)]
    k = [np.sqrt(s.k2_offset + q * q) for s in static]
    n = len(stack.layers)
    R = _static_interface(static[n], k[n], static[n + 1], k[n + 1], polarization)
    for i in range(n, 0, -1):
        r_above = _static_interface(static[i - 1], k[i - 1], static[i], k[i], polarization)
        R = film_reflection(r_above, -R, k[i], stack.layers[i - 1].thickness)
    return R
