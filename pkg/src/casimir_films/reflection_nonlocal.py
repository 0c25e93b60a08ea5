"""Nonlocal reflection of thin metal films with specular electron reflection.

The film is described by the Kliewer-Fuchs impedances of fields even (1)
and odd (2) about the film centre, continued to imaginary frequency.  In
dimensionless variables (scaled by the film's plasma frequency)

    Z_s = (2 Omega / H) sum_n 1 / (Omega^2 eps_t + k_n^2)
    Z_p = (2 / (Omega H)) sum_n k_n^-2 [Q^2 / eps_l
                                        + (n pi / H)^2 Omega^2 / (Omega^2 eps_t + k_n^2)]

with k_n^2 = (n pi / H)^2 + Q^2 and n running over all odd (even field) or
all even (odd field) integers, negative ones included.  Every summand is
real and positive.

The sums converge like n^-2, so they are evaluated as closed-form sums for
reference responses (vacuum transverse, hydrodynamic longitudinal) plus a
faster-decaying correction series, whose remainder is added by
Euler-Maclaurin.
The n = 0 term of the odd set is taken out of the closed form and added
exactly, which keeps the p impedance accurate as Omega -> 0.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from .constants import HBAR_C
from .materials import (
    ConstantDielectric,
    Drude,
    MaterialModel,
    Vacuum,
    f_longitudinal,
    f_transverse,
)
from .reflection_local import LayerStack, stack_reflection, stack_reflection_static

MAX_TERMS = 10**6
_FIRST_CHUNK = 32
_MAX_CHUNK = 8192
# points x modes evaluated per numpy call
_BLOCK_ELEMENTS = 1 << 20
# Gauss-Legendre rules on (0, 1) for the Euler-Maclaurin integral
_GL_RULES = [((x + 1) / 2, w / 2) for x, w in (np.polynomial.legendre.leggauss(m) for m in (24, 48))]
_FD_STEP = 1e-3
# the derivative term must be this small next to the remainder itself;
# the first neglected term is then below _EM_NEXT times it
_EM_SMOOTH = 0.05
_EM_NEXT = 0.05

# coth(x) - 1/x = sum c_j x^(2j-1)
_LANGEVIN = np.array([
    1 / 3, -1 / 45, 2 / 945, -1 / 4725, 2 / 93555, -1382 / 638512875,
    4 / 18243225, -3617 / 162820783125, 87734 / 38979295480125,
    -349222 / 1531329465290625,
])[::-1]


class Parity(enum.Enum):
    """Field parity about the film centre.

    EVEN fields (superscript 1) sum over odd n; ODD fields (superscript 2)
    sum over even n, including n = 0.
    """

    EVEN = 1
    ODD = 2


class TruncationError(ArithmeticError):
    """A mode sum did not reach its tolerance within the term budget."""

    def __init__(self, message, partial_sum=None, tail_bound=None):
        super().__init__(message)
        self.partial_sum = partial_sum
        self.tail_bound = tail_bound


@dataclass(frozen=True)
class FilmImpedances:
    Zs1: np.ndarray
    Zs2: np.ndarray
    Zp1: np.ndarray
    Zp2: np.ndarray
    truncation_n: np.ndarray
    truncation_error_estimate: np.ndarray


@dataclass(frozen=True)
class SubstrateImpedance:
    Zs: np.ndarray
    Zp: np.ndarray


def mode_wavevector(n, H, Q):
    return np.sqrt((np.asarray(n) * np.pi / H) ** 2 + np.asarray(Q) ** 2)


def _langevin(x):
    """coth(x) - 1/x without cancellation at small x."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 0.5
    xs = x[small]
    out[small] = xs * np.polyval(_LANGEVIN, xs * xs)
    xl = x[~small]
    out[~small] = 1.0 / np.tanh(xl) - 1.0 / xl
    return out


def _hydro_params(Omega, gamma, v_F):
    """(W, B, c) of the reference longitudinal response.

    eps_ref(k) = 1 + 1 / (W + beta^2 k^2) with W = Omega (Omega + gamma) and
    beta^2 = v_F^2 / 3 equals the Drude value at k = 0 and the Thomas-Fermi
    tail 1 + 3 / (v_F k)^2 at large k, and splits as
    1 / (k^2 eps_ref) = (1 - B) / k^2 + B / (k^2 + c).
    """
    W = Omega * (Omega + gamma)
    B = 1.0 / (W + 1.0)
    c = np.inf if v_F * v_F == 0 else 3.0 * (W + 1.0) / (v_F * v_F)
    return W, B, c


def _mode_corrections(Omega, Q, kz, gamma, v_F):
    """Nonlocal-minus-reference summands for s and p at normal wave number kz.

    The s reference is vacuum; the p reference is vacuum for the transverse
    part and ``eps_ref`` (see :func:`_hydro_params`) for the longitudinal
    part.  Shapes broadcast.
    """
    W, B, c = _hydro_params(Omega, gamma, v_F)
    k2 = kz * kz + Q * Q
    k = np.sqrt(k2)
    v = v_F * k / (Omega + gamma)
    et1 = f_transverse(v) / W
    el1 = f_longitudinal(v, gamma / Omega) / W
    O2 = Omega * Omega
    D_nl = O2 * (1.0 + et1) + k2
    D_vac = O2 + k2
    d_s = -O2 * et1 / (D_nl * D_vac)
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(k2 > 0, Q * Q / k2, 1.0)
    eref1 = 1.0 / (W + v_F * v_F / 3.0 * k2)
    d_l = (eref1 - el1) / (O2 * (1.0 + el1) * (1.0 + eref1))
    d_p = a * d_l + (1.0 - a) * d_s
    return d_s, d_p


def _reference_sums(Omega, Q, H, gamma, v_F):
    """Closed-form reference impedances, n = 0 excluded from the odd-field set.

    Returns (Zs1, Zs2, Zp1, Zp2) for eps_t = 1 and eps_l = eps_ref, using
    (2/H) sum_{n odd} 1/(x^2 + (n pi/H)^2) = tanh(xH/2)/x and the even-n
    analogue coth(xH/2)/x.
    """
    k0 = np.sqrt(Omega * Omega + Q * Q)
    _, B, c = _hydro_params(Omega, gamma, v_F)

    def s_odd(x):
        return np.tanh(0.5 * x * H) / x

    def s_even(x):
        return _langevin(0.5 * x * H) / x

    def s_long(S):
        # Q^2 [S(Q) - S(sqrt(Q^2 + c))], finite at Q = 0
        with np.errstate(invalid="ignore", divide="ignore"):
            sQ = np.where(Q > 0, Q * Q * S(np.where(Q > 0, Q, 1.0)), 0.0)
        if v_F == 0:
            return sQ
        return sQ - Q * Q * S(np.sqrt(Q * Q + c))

    Zs1 = Omega * s_odd(k0)
    Zs2 = Omega * s_even(k0)
    Zp1 = k0 * k0 / Omega * s_odd(k0) - B / Omega * s_long(s_odd)
    Zp2 = k0 * k0 / Omega * s_even(k0) - B / Omega * s_long(s_even)
    return Zs1, Zs2, Zp1, Zp2


def _em_tail(Om, Qf, H, gamma, v_F, a):
    """Euler-Maclaurin remainder sum_{j>=1} f(a - 1 + 2j) of the correction summands.

    With step 2 the midpoint form gives
    sum = (1/2) int_a^inf f dn + f'(a) / 12 - ...; the integral is done by
    Gauss-Legendre in u = a / n at two orders.  ``Om``, ``Qf`` have shape
    (m, 1) and ``a`` is a scalar.  Returns (tail_s, tail_p, err_s, err_p, smooth)
    where ``smooth`` flags points at which the derivative term is a small
    correction, i.e. the summand is well resolved by the mode spacing.
    """
    ints = []
    for (u, w) in _GL_RULES:
        n = a / u
        d_s, d_p = _mode_corrections(Om, Qf, n * np.pi / H, gamma, v_F)
        jac = w * a / (u * u)
        ints.append((d_s @ jac, d_p @ jac))
    delta = _FD_STEP * a
    n = np.array([a - delta, a + delta])
    d_s, d_p = _mode_corrections(Om, Qf, n * np.pi / H, gamma, v_F)
    der_s = (d_s[:, 1] - d_s[:, 0]) / (2 * delta) / 12.0
    der_p = (d_p[:, 1] - d_p[:, 0]) / (2 * delta) / 12.0
    (lo_s, lo_p), (hi_s, hi_p) = ints
    tail_s = 0.5 * hi_s + der_s
    tail_p = 0.5 * hi_p + der_p
    err_s = 0.5 * np.abs(hi_s - lo_s) + _EM_NEXT * np.abs(der_s)
    err_p = 0.5 * np.abs(hi_p - lo_p) + _EM_NEXT * np.abs(der_p)
    smooth = (np.abs(der_s) <= _EM_SMOOTH * np.abs(tail_s)) & (np.abs(der_p) <= _EM_SMOOTH * np.abs(tail_p))
    return tail_s, tail_p, err_s, err_p, smooth


def film_impedances(Omega, Q, H, gamma, v_F, rtol=1e-10, max_terms=MAX_TERMS):
    """All four film impedances Z_s^(1,2), Z_p^(1,2) at imaginary frequency.

    ``Omega`` and ``Q`` broadcast; ``H``, ``gamma``, ``v_F`` are scalars.
    The correction series is summed explicitly in growing chunks; after each
    chunk the remainder is estimated by Euler-Maclaurin, and summation stops
    once that estimate is trustworthy to ``rtol`` of every impedance.
    ``truncation_error_estimate`` is relative.
    """
    Omega, Q = np.broadcast_arrays(np.asarray(Omega, dtype=float), np.asarray(Q, dtype=float))
    shape = Omega.shape
    Om = Omega.ravel().copy()
    Qf = Q.ravel().copy()
    if np.any(Om <= 0) or H <= 0:
        raise ValueError("film impedances need Omega > 0 and H > 0")

    pref = 2.0 * Om / H
    base = np.array(_reference_sums(Om, Qf, H, gamma, v_F))
    # n = 0 member of the odd-field set, exact
    v0 = v_F * Qf / (Om + gamma)
    et0 = Om * Om + Om * f_transverse(v0) / (Om + gamma)
    el0 = Om * Om + Om * f_longitudinal(v0, gamma / Om) / (Om + gamma)
    base[1] += pref / (et0 + Qf * Qf)
    base[3] += pref / el0

    acc = np.zeros((4, Om.size))
    tail = np.zeros((4, Om.size))
    err = np.zeros((4, Om.size))
    n_used = np.zeros(Om.size, dtype=np.int64)
    active = np.arange(Om.size)
    n_start, chunk = 1, _FIRST_CHUNK
    while active.size:
        if n_start > max_terms:
            Z = base + acc
            raise TruncationError(
                f"mode sum not converged after {max_terms} terms for {active.size} points",
                partial_sum=Z[:, active], tail_bound=np.abs(tail[:, active]),
            )
        n = np.arange(n_start, n_start + 2 * chunk, dtype=float)  # starts odd, even length
        kz = n * np.pi / H
        step = max(1, _BLOCK_ELEMENTS // n.size)
        ok = np.zeros(active.size, dtype=bool)
        for lo in range(0, active.size, step):
            idx = active[lo:lo + step]
            d_s, d_p = _mode_corrections(Om[idx, None], Qf[idx, None], kz[None, :], gamma, v_F)
            w = 2.0 * pref[idx]
            acc[0, idx] += w * d_s[:, 0::2].sum(axis=1)
            acc[1, idx] += w * d_s[:, 1::2].sum(axis=1)
            acc[2, idx] += w * d_p[:, 0::2].sum(axis=1)
            acc[3, idx] += w * d_p[:, 1::2].sum(axis=1)
            smooth = np.ones(idx.size, dtype=bool)
            # odd n continue from n[-2] + 2, even n from n[-1] + 2
            for j, a in ((0, n[-2] + 1.0), (1, n[-1] + 1.0)):
                ts, tp, es, ep, sm = _em_tail(Om[idx, None], Qf[idx, None], H, gamma, v_F, a)
                tail[j, idx], tail[j + 2, idx] = w * ts, w * tp
                err[j, idx], err[j + 2, idx] = np.abs(w * es), np.abs(w * ep)
                smooth &= sm
            Z = np.abs(base[:, idx] + acc[:, idx] + tail[:, idx])
            ok[lo:lo + step] = smooth & np.all(err[:, idx] <= rtol * Z, axis=0)
        n_used[active] = n[-1]
        active = active[~ok]
        n_start += 2 * chunk
        chunk = min(2 * chunk, _MAX_CHUNK)

    Z = base + acc + tail
    return FilmImpedances(
        Zs1=Z[0].reshape(shape),
        Zs2=Z[1].reshape(shape),
        Zp1=Z[2].reshape(shape),
        Zp2=Z[3].reshape(shape),
        truncation_n=n_used.reshape(shape),
        truncation_error_estimate=np.max(err / np.abs(Z), axis=0).reshape(shape),
    )


def _film_params(material: MaterialModel, thickness=None):
    if isinstance(material, Drude):
        p = material.params
        return p.omega_p, material.omega_tau_eff(thickness) / p.omega_p, p.v_F
    raise TypeError("nonlocal film response needs a Drude material")


def impedance_s(parity: Parity, Omega, Q, H, material: Drude):
    z = film_impedances(Omega, Q, H, _film_params(material)[1], material.params.v_F)
    return z.Zs1 if parity is Parity.EVEN else z.Zs2


def impedance_p(parity: Parity, Omega, Q, H, material: Drude):
    z = film_impedances(Omega, Q, H, _film_params(material)[1], material.params.v_F)
    return z.Zp1 if parity is Parity.EVEN else z.Zp2


def substrate_impedance(below, zeta, q) -> SubstrateImpedance:
    """Local surface impedances of whatever lies under the film.

    ``below`` is a material (semi-infinite) or a local :class:`LayerStack`.
    Impedances are ratios of fields, hence independent of unit scaling.
    """
    zeta = np.asarray(zeta, dtype=float)
    q = np.asarray(q, dtype=float)
    if isinstance(below, LayerStack) and not below.layers:
        below = below.substrate
    if isinstance(below, (Vacuum, ConstantDielectric, Drude)):
        eps = below.epsilon(zeta)
        k = np.sqrt(eps * (zeta / HBAR_C) ** 2 + q * q)
        return SubstrateImpedance(Zs=zeta / (HBAR_C * k), Zp=HBAR_C * k / (zeta * eps))
    # layered substrate: impedance follows from its reflection seen from vacuum
    k0 = np.sqrt((zeta / HBAR_C) ** 2 + q * q)
    zs0 = zeta / (HBAR_C * k0)
    rs = stack_reflection(below, zeta, q, "s")
    rp = stack_reflection(below, zeta, q, "p")
    return SubstrateImpedance(Zs=zs0 * (1 + rs) / (1 - rs), Zp=(1 - rp) / (1 + rp) / zs0)


def rs_from_impedances(Z1, Z2, Z0, Zsub):
    """s amplitude of a film between vacuum (Z0) and a local substrate (Zsub)."""
    num = (Z1 - Z0) * (Z2 + Zsub) + (Z2 - Z0) * (Z1 + Zsub)
    den = (Z1 + Z0) * (Z2 + Zsub) + (Z2 + Z0) * (Z1 + Zsub)
    return num / den


def rp_from_impedances(Z1, Z2, Z0, Zsub):
    """p amplitude: the s expression with the overall sign flipped."""
    return -rs_from_impedances(Z1, Z2, Z0, Zsub)


def partial_reflections(Z, Z0, polarization):
    """Partial amplitudes r^(1,2) of a free-standing film."""
    if polarization == "s":
        return -(Z0 - Z) / (Z0 + Z)
    return (Z0 - Z) / (Z0 + Z)


def _dimensionless(material, zeta, q, thickness=None):
    wp, gamma, v_F = _film_params(material, thickness)
    return np.asarray(zeta, dtype=float) / wp, HBAR_C * np.asarray(q, dtype=float) / wp, gamma, v_F, wp


def reflection_s_nonlocal(film: Drude, H, substrate: SubstrateImpedance | None, Omega, Q):
    """Nonlocal s amplitude of a film of dimensionless thickness H.

    ``substrate=None`` means vacuum below the film.
    """
    z = film_impedances(Omega, Q, H, _film_params(film)[1], film.params.v_F)
    Z0 = Omega / np.sqrt(Omega**2 + Q**2)
    Zsub = Z0 if substrate is None else substrate.Zs
    return rs_from_impedances(z.Zs1, z.Zs2, Z0, Zsub)


def reflection_p_nonlocal(film: Drude, H, substrate: SubstrateImpedance | None, Omega, Q):
    z = film_impedances(Omega, Q, H, _film_params(film)[1], film.params.v_F)
    Z0 = np.sqrt(Omega**2 + Q**2) / Omega
    Zsub = Z0 if substrate is None else substrate.Zp
    return rp_from_impedances(z.Zp1, z.Zp2, Z0, Zsub)


def film_reflection_nonlocal(film: Drude, thickness, below, zeta, q, **tol):
    """(R_s, R_p, truncation error) for a nonlocal film over a local ``below``.

    Physical inputs: thickness in nm, zeta in eV, q in 1/nm.
    """
    Omega, Q, gamma, v_F, wp = _dimensionless(film, zeta, q, thickness)
    Omega, Q = np.broadcast_arrays(Omega, Q)
    H = wp * thickness / HBAR_C
    z = film_impedances(Omega, Q, H, gamma, v_F, **tol)
    k0 = np.sqrt(Omega**2 + Q**2)
    sub = substrate_impedance(below, zeta, q)
    Rs = rs_from_impedances(z.Zs1, z.Zs2, Omega / k0, sub.Zs)
    Rp = rp_from_impedances(z.Zp1, z.Zp2, k0 / Omega, sub.Zp)
    return Rs, Rp, z.truncation_error_estimate


def _static_below(below, q):
    """Omega-scaled substrate impedances (Z_s / Omega, Omega Z_p) in the static limit."""
    Q_phys = np.asarray(q, dtype=float)
    if not isinstance(below, LayerStack):
        below = LayerStack((), below)
    rs = stack_reflection_static(below, Q_phys, "s")
    rp = stack_reflection_static(below, Q_phys, "p")
    with np.errstate(divide="ignore"):
        return (1 + rs) / (1 - rs), (1 - rp) / (1 + rp)


def film_reflection_nonlocal_static(film: Drude, thickness, below, q):
    """zeta -> 0 limit of :func:`film_reflection_nonlocal`, in closed form.

    As Omega -> 0 the transverse term Omega^2 eps_t vanishes, so Z_s / Omega
    tends to the vacuum sums, while Omega Z_p tends to
    (2/H) sum_n Q^2 / (k_n^2 + kappa^2) with the Thomas-Fermi wave number
    kappa^2 = 3 / v_F^2.  Needs v_F > 0; at v_F = 0 the film is local.
    """
    wp, _, v_F = _film_params(film, thickness)
    if v_F * v_F == 0:
        raise ValueError("static nonlocal limit needs v_F > 0")
    Q = HBAR_C * np.asarray(q, dtype=float) / wp
    H = wp * thickness / HBAR_C
    s = np.sqrt(Q * Q + 3.0 / (v_F * v_F))
    sub_s, sub_p = _static_below(below, q)
    # vacuum-scaled: Z_s0 / Omega = 1 / Q, Omega Z_p0 = Q
    Rs = rs_from_impedances(np.tanh(0.5 * Q * H) / Q, 1.0 / (np.tanh(0.5 * Q * H) * Q), 1.0 / Q, sub_s / Q)
    Rp = rp_from_impedances(
        Q * Q * np.tanh(0.5 * s * H) / s, Q * Q / (np.tanh(0.5 * s * H) * s), Q, sub_p * Q
    )
    return Rs, Rp


def halfspace_reflection_nonlocal_static(material: Drude, q):
    """zeta -> 0 limit of the nonlocal half-space: R_s = 0 and
    R_p = (s - Q) / (s + Q) with s = sqrt(Q^2 + 3 / v_F^2)."""
    wp, _, v_F = _film_params(material)
    if v_F * v_F == 0:
        raise ValueError("static nonlocal limit needs v_F > 0")
    Q = HBAR_C * np.asarray(q, dtype=float) / wp
    s = np.sqrt(Q * Q + 3.0 / (v_F * v_F))
    return np.zeros_like(Q), (s - Q) / (s + Q)


def halfspace_impedances(Omega, Q, gamma, v_F, rtol=1e-10):
    """Semi-infinite specular impedances (Z_s, Z_p): the H -> infinity limit.

    The mode sums become integrals over the normal wave number,
    (2 Omega / pi) int_0^inf dk_z (...), evaluated as the same closed-form
    reference as the film sums plus an adaptive quadrature of the correction.
    """
    Omega, Q = np.broadcast_arrays(np.asarray(Omega, dtype=float), np.asarray(Q, dtype=float))
    shape = Omega.shape
    Om = Omega.ravel()
    Qf = Q.ravel()
    k0 = np.sqrt(Om * Om + Qf * Qf)
    _, B, c = _hydro_params(Om, gamma, v_F)
    # (2/pi) int_0^inf dk_z / (x^2 + k_z^2) = 1/x
    zs_vac = Om / k0
    long_ref = Qf if v_F == 0 else Qf - Qf * Qf / np.sqrt(Qf * Qf + c)
    zp_vac = k0 / Om - B / Om * long_ref
    # k_z = s u / (1 - u) maps [0, 1) onto [0, inf); s at the skin-depth scale
    s = np.sqrt(Om * Om + Om / (Om + gamma) + Qf * Qf)
    scale = 2.0 * Om / np.pi

    def integrand(u):
        kz = s * u / (1.0 - u)
        jac = s / (1.0 - u) ** 2
        d_s, d_p = _mode_corrections(Om, Qf, kz, gamma, v_F)
        return np.concatenate([scale * d_s * jac / zs_vac, scale * d_p * jac / zp_vac])

    val, err = quad_vec(integrand, 0.0, 1.0, epsabs=0.0, epsrel=rtol, norm="max", limit=2000)
    m = Om.size
    Zs = zs_vac * (1.0 + val[:m])
    Zp = zp_vac * (1.0 + val[m:])
    return Zs.reshape(shape), Zp.reshape(shape), float(err)


def halfspace_reflection_nonlocal(material: Drude, zeta, q, rtol=1e-10):
    """(R_s, R_p, quadrature error) of a nonlocal semi-infinite metal."""
    Omega, Q, gamma, v_F, _ = _dimensionless(material, zeta, q)
    Omega, Q = np.broadcast_arrays(Omega, Q)
    Zs, Zp, err = halfspace_impedances(Omega, Q, gamma, v_F, rtol)
    k0 = np.sqrt(Omega**2 + Q**2)
    Rs = partial_reflections(Zs, Omega / k0, "s")
    Rp = partial_reflections(Zp, k0 / Omega, "p")
    return Rs, Rp, err
