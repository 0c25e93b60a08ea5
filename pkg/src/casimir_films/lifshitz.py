"""Casimir pressure between two plates from the Lifshitz formula.

    F = -(k_B T / pi) sum'_n int_0^inf dq q k0 sum_{s,p} [R1^-1 R2^-1 e^{2 a k0} - 1]^-1

with zeta_n = 2 pi k_B T n, k0 = sqrt(zeta^2/(hbar c)^2 + q^2), and the
n = 0 term weighted by one half.  For each Matsubara frequency the q
integral is rewritten in x = 2 a k0, which puts the integrand in the form
e^{-x} times a smooth function.  It is done by Gauss-Laguerre quadrature
(with graded Gauss-Legendre panels near the lower end when x_min is small)
at increasing order until two successive orders agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_laguerre

from .constants import EV_PER_NM3_TO_PA, HBAR_C, K_B
from .materials import Drude
from .reflection_local import LayerStack, stack_reflection, stack_reflection_static
from .reflection_nonlocal import (
    film_reflection_nonlocal,
    film_reflection_nonlocal_static,
    halfspace_reflection_nonlocal,
    halfspace_reflection_nonlocal_static,
)

LOCAL = "local"
NONLOCAL = "nonlocal"

# Gauss-Laguerre orders tried in turn for each q (and zero-T zeta) integral
_ORDERS = (20, 40, 80, 160, 320)
# graded Gauss-Legendre panels cover t in [0, _GRADE_END] when x_min is small
_GRADE_END = 1.0
# the zero-temperature frequency integral is graded down to y ~ 2^-16
_ZERO_T_PANELS = 16
_UNDERFLOW = 745.0
_ATOL_FRACTION = 1e-4
# consecutive negligible Matsubara terms required before stopping
_QUIET_TERMS = 5


class ForceError(ArithmeticError):
    """The Lifshitz integrand left the physical domain or failed to converge."""


@lru_cache(maxsize=None)
def _laguerre(order):
    return roots_laguerre(order)


@dataclass(frozen=True)
class Tolerances:
    matsubara_rel: float = 1e-6
    quad_rel: float = 1e-7

    def __post_init__(self):
        for name in ("matsubara_rel", "quad_rel"):
            val = getattr(self, name)
            if not 0 < val <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2], got {val}")


@dataclass(frozen=True)
class PlateConfig:
    """A plate: a layer stack plus the way its top metal responds."""

    stack: LayerStack
    response_mode: str = LOCAL

    def __post_init__(self):
        if self.response_mode not in (LOCAL, NONLOCAL):
            raise ValueError(f"response_mode must be {LOCAL!r} or {NONLOCAL!r}")
        if self.response_mode == NONLOCAL and self.stack.layers:
            if not isinstance(self.stack.layers[0].material, Drude):
                raise ValueError("nonlocal plates need a Drude top layer")

    def with_mode(self, mode):
        return PlateConfig(self.stack, mode)

    def _nonlocal_kind(self):
        if self.response_mode != NONLOCAL:
            return None
        if self.stack.layers:
            return "film"
        return "halfspace" if isinstance(self.stack.substrate, Drude) else None

    def reflection(self, zeta, q, mode_rtol=1e-7):
        """(R_s, R_p, error) at zeta > 0 (eV) and q (1/nm)."""
        kind = self._nonlocal_kind()
        if kind == "film":
            top = self.stack.layers[0]
            below = LayerStack(self.stack.layers[1:], self.stack.substrate)
            Rs, Rp, err = film_reflection_nonlocal(
                top.material, top.thickness, below, zeta, q,
                rtol=mode_rtol,
            )
            return Rs, Rp, float(np.max(err, initial=0.0))
        if kind == "halfspace":
            return halfspace_reflection_nonlocal(self.stack.substrate, zeta, q, rtol=mode_rtol)
        return stack_reflection(self.stack, zeta, q, "s"), stack_reflection(self.stack, zeta, q, "p"), 0.0

    def reflection_static(self, q, mode_rtol=None):
        """zeta -> 0 limit of :meth:`reflection`, (R_s, R_p, 0.0)."""
        kind = self._nonlocal_kind()
        metal = None
        if kind == "film":
            metal = self.stack.layers[0].material
        elif kind == "halfspace":
            metal = self.stack.substrate
        if metal is None or metal.params.v_F ** 2 == 0:
            return stack_reflection_static(self.stack, q, "s"), stack_reflection_static(self.stack, q, "p"), 0.0
        if kind == "film":
            top = self.stack.layers[0]
            below = LayerStack(self.stack.layers[1:], self.stack.substrate)
            Rs, Rp = film_reflection_nonlocal_static(top.material, top.thickness, below, q)
        else:
            Rs, Rp = halfspace_reflection_nonlocal_static(metal, q)
        return Rs, Rp, 0.0


@dataclass(frozen=True)
class IdealMirror:
    """Perfect reflector, R_s = -1 and R_p = 1 at every frequency."""

    def reflection(self, zeta, q, mode_rtol=None):
        shape = np.broadcast(np.asarray(zeta), np.asarray(q)).shape
        return -np.ones(shape), np.ones(shape), 0.0

    def reflection_static(self, q, mode_rtol=None):
        return self.reflection(0.0, q)


@dataclass(frozen=True)
class ForceJob:
    plate1: PlateConfig | IdealMirror
    plate2: PlateConfig | IdealMirror
    separation: float  # nm
    temperature: float = 300.0  # K
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if not self.separation > 0:
            raise ValueError(f"separation must be > 0 nm, got {self.separation}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0 K, got {self.temperature}")

    def with_mode(self, mode):
        """Same job with every plate whose top medium is a Drude metal switched
        to ``mode``; dielectric-topped plates and ideal mirrors stay as they are."""

        def swap(p):
            if isinstance(p, PlateConfig) and isinstance(p.stack.top, Drude):
                return p.with_mode(mode)
            return p

        return ForceJob(swap(self.plate1), swap(self.plate2), self.separation, self.temperature, self.tolerances)


@dataclass
class ForceResult:
    """Pressure in Pa (negative = attraction) with its breakdown."""

    pressure: float
    per_polarization: dict
    n_terms_used: int
    per_term_contributions: list
    quad_error_estimate: float
    matsubara_tail_estimate: float = 0.0
    reflection_error: float = 0.0


def matsubara_frequency(n, T):
    """zeta_n = 2 pi k_B T n in eV."""
    if not T > 0:
        raise ValueError("temperature must be > 0")
    return 2.0 * np.pi * K_B * T * np.asarray(n)


def k0(zeta, q):
    """Normal wave number in the vacuum gap, 1/nm."""
    return np.sqrt((np.asarray(zeta) / HBAR_C) ** 2 + np.asarray(q) ** 2)


def _kernel(plate1, plate2, zeta, x_min, t, a, mode_rtol):
    """Laguerre integrands (s, p) for frequencies ``zeta`` at nodes ``t``.

    ``zeta`` and ``x_min`` have shape (m, 1); ``t`` has shape (k,).
    """
    x = x_min + t
    q = np.sqrt(t * (t + 2.0 * x_min)) / (2.0 * a)
    static = zeta == 0
    if np.all(static):
        r1 = plate1.reflection_static(q, mode_rtol)
        r2 = plate2.reflection_static(q, mode_rtol)
    else:
        if np.any(static):
            raise ValueError("mix of static and finite frequencies in one block")
        zz = np.broadcast_to(zeta, q.shape)
        r1 = plate1.reflection(zz, q, mode_rtol)
        r2 = plate2.reflection(zz, q, mode_rtol)
    pref = x * x / (8.0 * a**3) * np.exp(-x_min)
    ex = np.exp(-x)
    out = []
    for R1, R2 in zip(r1[:2], r2[:2]):
        rho = R1 * R2
        loop = rho * ex
        if np.any(np.abs(loop) >= 1.0):
            raise ForceError("|R1 R2 exp(-2 a k0)| >= 1: reflection amplitudes are unphysical")
        out.append(pref * rho / (1.0 - loop))
    return out[0], out[1], max(r1[2], r2[2])


@lru_cache(maxsize=None)
def _composite_rule(panels, order):
    """Nodes and weights for int_0^inf e^{-t} g(t) dt.

    With ``panels`` > 0 the range [0, 1] is cut into panels shrinking
    geometrically towards t = 0 (Gauss-Legendre on each) and [1, inf) is
    left to Gauss-Laguerre.  The grading resolves the branch points of the
    layer wave numbers, which sit at a distance of order x_min from t = 0.
    """
    tl, wl = _laguerre(order)
    if panels == 0:
        return tl, wl
    xg, wg = leggauss(order)
    edges = np.concatenate([[0.0], _GRADE_END * 2.0 ** np.arange(-panels + 1, 1)])
    t, w = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        tp = lo + half * (xg + 1.0)
        t.append(tp)
        w.append(half * wg * np.exp(-tp))
    t.append(_GRADE_END + tl)
    w.append(wl * np.exp(-_GRADE_END))
    return np.concatenate(t), np.concatenate(w)


def _panel_count(x_min):
    # enough halvings that the first panel is no longer than x_min
    with np.errstate(divide="ignore"):
        n = np.ceil(np.log2(_GRADE_END / x_min))
    return np.where((x_min > 0) & (x_min < _GRADE_END), np.clip(n, 1, 40), 0).astype(int)


def _q_integrals(plate1, plate2, zeta, a, quad_rel, mode_rtol):
    """int dq q k0 [...] for each frequency in ``zeta`` (1/nm^3), per polarization.

    Returns (I_s, I_p, err, refl_err) arrays of the same length as ``zeta``.
    """
    zeta = np.asarray(zeta, dtype=float)
    m = zeta.size
    x_min = 2.0 * a * zeta / HBAR_C
    I_s = np.zeros(m)
    I_p = np.zeros(m)
    err = np.zeros(m)
    refl_err = 0.0
    # exp(-x_min) underflows: the term is exactly zero
    live = x_min <= _UNDERFLOW
    # negligible next to the ideal-mirror value 2 zeta(3) / (8 a^3) of one term
    atol = _ATOL_FRACTION * quad_rel * 0.3 / a**3
    panels = _panel_count(x_min)
    for P in np.unique(panels[live]):
        todo = np.flatnonzero(live & (panels == P))
        prev = None
        for order in _ORDERS:
            t, w = _composite_rule(int(P), order)
            gs, gp, re = _kernel(plate1, plate2, zeta[todo, None], x_min[todo, None], t, a, mode_rtol)
            refl_err = max(refl_err, re)
            cur_s, cur_p = gs @ w, gp @ w
            if prev is not None:
                ps, pp = prev
                diff = np.abs(cur_s - ps) + np.abs(cur_p - pp)
                done = diff <= quad_rel * np.abs(cur_s + cur_p) + atol
                I_s[todo] = cur_s
                I_p[todo] = cur_p
                err[todo] = diff
                keep = ~done
                todo = todo[keep]
                prev = (cur_s[keep], cur_p[keep])
                if not todo.size:
                    break
            else:
                prev = (cur_s, cur_p)
        if todo.size:
            raise ForceError(f"q quadrature not converged at {todo.size} Matsubara frequencies")
    return I_s, I_p, err, refl_err


def force_pp(job: ForceJob, zero_term_weight=0.5) -> ForceResult:
    """Casimir pressure at finite temperature (Matsubara sum)."""
    a, T = job.separation, job.temperature
    tol = job.tolerances
    mode_rtol = tol.quad_rel
    kT = K_B * T
    zeta1 = 2.0 * np.pi * kT
    # terms fall off like exp(-2 a zeta_n / hbar c)
    n_char = HBAR_C / (2.0 * a * zeta1)
    block = int(min(max(16, math.ceil(4 * n_char)), 4096))
    scale = -kT / np.pi * EV_PER_NM3_TO_PA

    contrib_s, contrib_p, errs = [], [], []
    refl_err = 0.0
    I_s, I_p, e, re = _q_integrals(job.plate1, job.plate2, np.zeros(1), a, tol.quad_rel, mode_rtol)
    contrib_s.append(zero_term_weight * scale * I_s[0])
    contrib_p.append(zero_term_weight * scale * I_p[0])
    errs.append(zero_term_weight * abs(scale) * e[0])
    refl_err = max(refl_err, re)

    n_next, quiet = 1, 0
    while True:
        ns = np.arange(n_next, n_next + block)
        I_s, I_p, e, re = _q_integrals(job.plate1, job.plate2, ns * zeta1, a, tol.quad_rel, mode_rtol)
        refl_err = max(refl_err, re)
        stop = False
        for i in range(ns.size):
            cs, cp = scale * I_s[i], scale * I_p[i]
            contrib_s.append(cs)
            contrib_p.append(cp)
            errs.append(abs(scale) * e[i])
            total = math.fsum(contrib_s) + math.fsum(contrib_p)
            if abs(cs + cp) <= 0.1 * tol.matsubara_rel * abs(total):
                quiet += 1
                if quiet >= _QUIET_TERMS:
                    stop = True
                    break
            else:
                quiet = 0
        n_next += block
        if stop:
            break
        if n_next > 10**7:
            raise ForceError("Matsubara sum did not converge")

    terms = [s + p for s, p in zip(contrib_s, contrib_p)]
    Fs, Fp = math.fsum(contrib_s), math.fsum(contrib_p)
    # geometric remainder after the last kept term
    r = abs(terms[-1] / terms[-2]) if terms[-2] != 0 else 0.0
    tail = abs(terms[-1]) * r / (1.0 - r) if r < 1 else abs(terms[-1]) * len(terms)
    return ForceResult(
        pressure=Fs + Fp,
        per_polarization={"s": Fs, "p": Fp},
        n_terms_used=len(terms),
        per_term_contributions=terms,
        quad_error_estimate=math.fsum(errs),
        matsubara_tail_estimate=tail,
        reflection_error=refl_err,
    )


def force_zero_temperature(job: ForceJob) -> ForceResult:
    """T -> 0 pressure: the Matsubara sum replaced by an integral over zeta.

    F = -(1 / 2 pi^2) int_0^inf dzeta int dq q k0 [...], with
    zeta = hbar c y / (2a) integrated by Gauss-Laguerre in y.
    """
    a = job.separation
    tol = job.tolerances
    scale = -1.0 / (2.0 * np.pi**2) * EV_PER_NM3_TO_PA * HBAR_C / (2.0 * a)
    prev = None
    refl_err = 0.0
    for order in _ORDERS:
        y, w = _composite_rule(_ZERO_T_PANELS, order)
        # plain weights for int_0^inf f(y) dy; f is zero past the cutoff
        keep = y < _UNDERFLOW
        y, w = y[keep], w[keep] * np.exp(y[keep])
        zeta = HBAR_C * y / (2.0 * a)
        I_s, I_p, e, re = _q_integrals(job.plate1, job.plate2, zeta, a, tol.quad_rel, tol.quad_rel)
        refl_err = max(refl_err, re)
        Fs = scale * float(I_s @ w)
        Fp = scale * float(I_p @ w)
        inner_err = abs(scale) * float(e @ w)
        if prev is not None:
            outer_err = abs(Fs + Fp - prev)
            if outer_err <= tol.quad_rel * abs(Fs + Fp):
                return ForceResult(
                    pressure=Fs + Fp,
                    per_polarization={"s": Fs, "p": Fp},
                    n_terms_used=y.size,
                    per_term_contributions=[],
                    quad_error_estimate=outer_err + inner_err,
                    reflection_error=refl_err,
                )
        prev = Fs + Fp
    raise ForceError("frequency integral did not converge")


def percent_difference(job_local: ForceJob, job_nonlocal: ForceJob):
    """100 |F_local - F_nonlocal| / |F_local|, plus both force results."""
    loc = force_pp(job_local)
    nl = force_pp(job_nonlocal)
    return percent_of(loc.pressure, nl.pressure), loc, nl


def percent_of(f_local, f_nonlocal):
    if f_local == 0:
        raise ZeroDivisionError("percent difference undefined for zero local force")
    return 100.0 * abs(f_local - f_nonlocal) / abs(f_local)
