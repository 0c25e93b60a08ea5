import math

import numpy as np
import pytest

from casimir_films import (
    EV_PER_NM3_TO_PA,
    HBAR_C,
    K_B,
    LOCAL,
    NONLOCAL,
    ConstantDielectric,
    Drude,
    ForceError,
    ForceJob,
    IdealMirror,
    Layer,
    LayerStack,
    PlateConfig,
    Tolerances,
    Vacuum,
    force_pp,
    force_zero_temperature,
    matsubara_frequency,
    percent_difference,
)
from casimir_films.lifshitz import k0, percent_of

from .conftest import AU_PARAMS

AU = Drude(AU_PARAMS)
SIO2 = ConstantDielectric(4.0)


def ideal_pressure(a):
    return -math.pi**2 * HBAR_C / (240 * a**4) * EV_PER_NM3_TO_PA


def halfspace(mode=LOCAL):
    return PlateConfig(LayerStack((), AU), mode)


def film(h, substrate=SIO2, mode=LOCAL):
    return PlateConfig(LayerStack((Layer(AU, h),), substrate), mode)


class _Mirror:
    """Plate with fixed amplitudes, for testing the integrand guard."""

    def __init__(self, r):
        self.r = r

    def reflection(self, zeta, q, mode_rtol=None):
        shape = np.broadcast(np.asarray(zeta), np.asarray(q)).shape
        return np.full(shape, self.r), np.full(shape, self.r), 0.0

    def reflection_static(self, q, mode_rtol=None):
        return self.reflection(0.0, q)


class TestBasics:
    def test_matsubara(self):
        assert matsubara_frequency(0, 300) == 0
        assert matsubara_frequency(1, 300) == pytest.approx(2 * math.pi * K_B * 300, rel=1e-15)
        assert matsubara_frequency(1, 300) == pytest.approx(0.1624, abs=1e-4)
        assert matsubara_frequency(2, 300) == 2 * matsubara_frequency(1, 300)
        assert matsubara_frequency(1, 600) == 2 * matsubara_frequency(1, 300)

    def test_matsubara_needs_temperature(self):
        with pytest.raises(ValueError):
            matsubara_frequency(1, 0.0)

    def test_k0(self):
        assert k0(2.0, 0.0) == pytest.approx(2.0 / HBAR_C, rel=1e-15)
        assert k0(0.0, 0.7) == 0.7
        assert k0(3 * HBAR_C, 4.0) == pytest.approx(5.0, rel=1e-15)

    @pytest.mark.parametrize("kw", [dict(separation=0.0), dict(separation=-1.0), dict(temperature=0.0)])
    def test_job_validation(self, kw):
        args = dict(plate1=halfspace(), plate2=halfspace(), separation=100.0, temperature=300.0)
        args.update(kw)
        with pytest.raises(ValueError):
            ForceJob(**args)

    @pytest.mark.parametrize("val", [0.0, -1e-6, 0.1])
    def test_tolerance_range(self, val):
        with pytest.raises(ValueError):
            Tolerances(matsubara_rel=val)
        with pytest.raises(ValueError):
            Tolerances(quad_rel=val)

    def test_nonlocal_needs_drude_top(self):
        with pytest.raises(ValueError):
            PlateConfig(LayerStack((Layer(SIO2, 5.0),), AU), NONLOCAL)

    def test_with_mode_leaves_dielectrics(self):
        bare = PlateConfig(LayerStack((), SIO2))
        job = ForceJob(bare, film(2.0), 100.0).with_mode(NONLOCAL)
        assert job.plate1.response_mode == LOCAL
        assert job.plate2.response_mode == NONLOCAL

    def test_percent_of(self):
        assert percent_of(-2.0, -2.0) == 0.0
        assert percent_of(-2.0, -1.9) == pytest.approx(5.0)
        with pytest.raises(ZeroDivisionError):
            percent_of(0.0, -1.0)


class TestIdealMirrors:
    @pytest.mark.parametrize("a", [50.0, 100.0, 500.0])
    def test_zero_temperature(self, a):
        res = force_zero_temperature(ForceJob(IdealMirror(), IdealMirror(), a))
        assert res.pressure == pytest.approx(ideal_pressure(a), rel=1e-3)

    def test_value_at_100nm(self):
        assert ideal_pressure(100.0) == pytest.approx(-13.0, abs=0.01)

    def test_thermal_correction_small_at_short_range(self):
        res = force_pp(ForceJob(IdealMirror(), IdealMirror(), 100.0, 300.0))
        assert res.pressure == pytest.approx(ideal_pressure(100.0), rel=1e-3)


class TestIntegrand:
    def test_no_reflection_no_force(self):
        vac = PlateConfig(LayerStack((), Vacuum()))
        assert force_pp(ForceJob(vac, halfspace(), 100.0)).pressure == 0.0
        assert force_zero_temperature(ForceJob(halfspace(), vac, 100.0)).pressure == 0.0

    def test_unphysical_amplitudes(self):
        with pytest.raises(ForceError):
            force_pp(ForceJob(_Mirror(1.5), _Mirror(1.5), 100.0))

    @pytest.mark.parametrize("mode", [LOCAL, NONLOCAL])
    def test_plate_swap(self, mode):
        p1, p2 = halfspace(mode), film(2.0, mode=mode)
        a = force_pp(ForceJob(p1, p2, 80.0))
        b = force_pp(ForceJob(p2, p1, 80.0))
        assert a.pressure == b.pressure
        assert a.per_term_contributions == b.per_term_contributions

    def test_parts_add_up(self):
        res = force_pp(ForceJob(film(5.0), halfspace(), 100.0))
        assert res.pressure == pytest.approx(res.per_polarization["s"] + res.per_polarization["p"], rel=1e-15)
        assert math.fsum(res.per_term_contributions) == pytest.approx(res.pressure, rel=1e-14)
        assert res.n_terms_used == len(res.per_term_contributions)

    def test_zero_term_weight(self):
        job = ForceJob(film(5.0), halfspace(), 100.0)
        half = force_pp(job)
        full = force_pp(job, zero_term_weight=1.0)
        assert full.pressure - half.pressure == pytest.approx(half.per_term_contributions[0], rel=1e-12)

    def test_error_estimate_within_tolerance(self):
        res = force_pp(ForceJob(film(2.0), halfspace(), 100.0).with_mode(NONLOCAL))
        assert res.quad_error_estimate < 1e-6 * abs(res.pressure)
        assert res.pressure < 0


@pytest.mark.parametrize("plates", [
    (halfspace(), halfspace()),
    (film(2.0, Vacuum()), film(2.0, Vacuum())),
    (film(10.0), film(10.0)),
    (halfspace(), film(2.0)),
], ids=["halfspaces", "free films", "films on dielectric", "halfspace vs film"])
def test_monotone_in_separation(plates):
    p = [abs(force_pp(ForceJob(*plates, a)).pressure) for a in (50, 100, 200, 350, 500)]
    assert np.all(np.diff(p) < 0)


@pytest.mark.parametrize("plates", [
    (halfspace(), halfspace()),
    (film(2.0, Vacuum()), film(2.0, Vacuum())),
    (film(10.0), film(10.0)),
    (halfspace(), film(2.0)),
], ids=["halfspaces", "free films", "films on dielectric", "halfspace vs film"])
@pytest.mark.parametrize("a", [50.0, 300.0])
def test_nonlocal_weakens_force(plates, a):
    job = ForceJob(*plates, a)
    delta, loc, nl = percent_difference(job, job.with_mode(NONLOCAL))
    assert loc.pressure < 0 and nl.pressure < 0
    assert abs(nl.pressure) <= abs(loc.pressure)
    assert delta >= 0


def test_thickness_mostly_affects_s():
    # relative change going from H = 0.1 to H = 3, normalised at H = 0.1
    h = lambda H: H * HBAR_C / AU_PARAMS.omega_p
    thin, thick = (force_pp(ForceJob(film(h(H)), film(h(H)), 100.0)).per_polarization for H in (0.1, 3.0))
    rel = {k: abs(thick[k] - thin[k]) / abs(thin[k]) for k in "sp"}
    assert rel["s"] > 3 * rel["p"]


def test_converges_under_tighter_tolerances():
    plates = (film(HBAR_C / 9.0), halfspace())
    job = ForceJob(*plates, 100.0).with_mode(NONLOCAL)
    coarse = force_pp(job)
    fine = force_pp(ForceJob(job.plate1, job.plate2, 100.0, 300.0, Tolerances(5e-7, 5e-8)))
    budget = coarse.quad_error_estimate + coarse.matsubara_tail_estimate
    assert abs(fine.pressure - coarse.pressure) < budget


def test_low_temperature_matches_zero_temperature():
    job = ForceJob(halfspace(), halfspace(), 100.0, 1.0)
    cold = force_pp(job)
    zero = force_zero_temperature(job)
    assert cold.pressure == pytest.approx(zero.pressure, rel=5e-3)


def test_zero_temperature_decays():
    p = [abs(force_zero_temperature(ForceJob(halfspace(), halfspace(), a)).pressure) for a in (50, 200, 800)]
    assert p[0] > p[1] > p[2] > 0
