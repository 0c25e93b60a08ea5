"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
come, or read the summary at the end of any pytest run.
"""
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from casimir_films import (
    EV_PER_NM3_TO_PA,
    HBAR_C,
    NONLOCAL,
    ConstantDielectric,
    Drude,
    DrudeParams,
    ForceJob,
    IdealMirror,
    Layer,
    LayerStack,
    PlateConfig,
    force_pp,
    force_zero_temperature,
    stack_reflection,
)
from casimir_films import cli
from casimir_films.lifshitz import percent_of
from casimir_films.reflection_nonlocal import film_reflection_nonlocal, halfspace_reflection_nonlocal

from .conftest import ACCEPTANCE, AU_PARAMS

AU = Drude(AU_PARAMS)
AU_LOCAL = Drude(DrudeParams(9.0, 0.035, 0.0))
SIO2 = ConstantDielectric(4.0)
METAL = Drude(DrudeParams(4.5, 0.035, 0.00467))
WP = 9.0
TABLE_EXPECTED = {"SiO2": 0.34, "metal_half": 0.37, "metal_double": 0.44, "vacuum": 0.44}
UNIT_SUITES = ["test_materials.py", "test_reflection_local.py", "test_reflection_nonlocal.py", "test_lifshitz.py", "test_cli.py"]


def verdict(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _rows(name):
    cfg = cli.load_config(name)
    _, rows = cli.compute_rows(cfg)
    assert all(r["error"] == "" for r in rows), [r["error"] for r in rows if r["error"]]
    return cfg, rows


@pytest.fixture(scope="module")
def force_sweeps():
    out, times = {}, {}
    for name, cfg in ((n, cli.load_config(n)) for n in sorted(cli.bundled_scenarios())):
        if cfg.sweep.type == "reflection":
            continue
        t = time.perf_counter()
        out[name] = _rows(name)[1]
        times[name] = time.perf_counter() - t
    return out, times


def _delta(rows, **match):
    return {
        float(r["a_nm"]): float(r["delta_percent"])
        for r in rows
        if all(r[k] == v for k, v in match.items())
    }


def test_criterion_1_ideal_mirrors():
    worst, slowest = 0.0, 0.0
    for a in (50.0, 100.0, 500.0):
        t = time.perf_counter()
        p = force_zero_temperature(ForceJob(IdealMirror(), IdealMirror(), a)).pressure
        slowest = max(slowest, time.perf_counter() - t)
        exact = -math.pi**2 * HBAR_C / (240 * a**4) * EV_PER_NM3_TO_PA
        worst = max(worst, abs(p / exact - 1))
    verdict(1, worst < 1e-3 and slowest < 1.0, f"max rel err {worst:.2e}, slowest {slowest:.2f} s")


def test_criterion_2_local_limit():
    t = time.perf_counter()
    Om = np.geomspace(1e-3, 1, 20)[:, None]
    Q = np.array([0.0, 0.1, 0.5, 1.0])[None, :]
    zeta, q = Om * WP, Q * WP / HBAR_C
    worst = 0.0
    for sub in (SIO2, METAL):
        for H in (0.1, 1.0, 3.0):
            h = H * HBAR_C / WP
            Rs, Rp, _ = film_reflection_nonlocal(AU_LOCAL, h, sub, zeta, q)
            stack = LayerStack((Layer(AU_LOCAL, h),), sub)
            worst = max(worst, np.max(np.abs(Rs - stack_reflection(stack, zeta, q, "s"))))
            worst = max(worst, np.max(np.abs(Rp - stack_reflection(stack, zeta, q, "p"))))
    dt = time.perf_counter() - t
    verdict(2, worst <= 1e-8 and dt < 10, f"max |R_nl - R_loc| = {worst:.1e}, {dt:.2f} s")


def test_criterion_3_table(force_sweeps):
    sweeps, times = force_sweeps
    got = {r["substrate"]: float(r["delta_percent"]) for r in sweeps["table1"]}
    dev = {k: got[k] - v for k, v in TABLE_EXPECTED.items()}
    ok = all(abs(d) <= 0.08 for d in dev.values()) and times["table1"] < 120
    shown = ", ".join(f"{k} {got[k]:.3f} (want {v})" for k, v in TABLE_EXPECTED.items())
    verdict(3, ok, f"{shown}; {times['table1']:.1f} s")


def test_criterion_4_thick_film_is_halfspace(force_sweeps):
    rows = force_sweeps[0]["fig7"]
    thick = _delta(rows, h_nm="100")
    hs = PlateConfig(LayerStack((), AU))
    worst = 0.0
    for a, d in thick.items():
        job = ForceJob(hs, hs, a)
        ref = percent_of(force_pp(job).pressure, force_pp(job.with_mode(NONLOCAL)).pressure)
        worst = max(worst, abs(d / ref - 1))
    verdict(4, worst < 0.05, f"max relative gap {worst:.2e} over {len(thick)} separations")


def test_criterion_5_thinner_is_stronger(force_sweeps):
    rows = force_sweeps[0]["fig7"]
    d = [_delta(rows, h_nm=h)[100.0] for h in ("2", "10", "100")]
    verdict(5, d[0] > d[1] > d[2], "a = 100 nm: h = 2, 10, 100 -> " + ", ".join(f"{x:.4f}" for x in d))


def test_criterion_6_substrate_damping(force_sweeps):
    free, coated = force_sweeps[0]["fig7"], force_sweeps[0]["fig8"]
    bad = []
    n = 0
    for h in ("2", "10"):
        f, c = _delta(free, h_nm=h), _delta(coated, h_nm=h)
        for a in c:
            n += 1
            if not c[a] < f[a]:
                bad.append(f"h={h} a={a:g}: {c[a]:.4f} >= {f[a]:.4f}")
    verdict(6, not bad, f"{n - len(bad)}/{n} points damped" + (f"; violations: {'; '.join(bad)}" if bad else ""))


def test_criterion_7_magnitude(force_sweeps):
    sweeps = force_sweeps[0]
    worst = max(
        (float(r["delta_percent"]), name, r["a_nm"])
        for name, rows in sweeps.items() for r in rows if float(r["a_nm"]) >= 50
    )
    free = _delta(sweeps["fig7"], h_nm="2")
    a_min = min(free)
    ok = worst[0] < 1 and free[a_min] < 10
    verdict(7, ok, f"max {worst[0]:.4f} ({worst[1]}, a = {worst[2]} nm); free 2 nm at a = {a_min:g}: {free[a_min]:.4f}")


def _differences(H, Om, Q, sub):
    zeta, q = Om * WP, Q * WP / HBAR_C
    if np.isinf(H):
        Rs, Rp, _ = halfspace_reflection_nonlocal(AU, zeta, q)
        stack = LayerStack((), AU)
    else:
        h = H * HBAR_C / WP
        Rs, Rp, _ = film_reflection_nonlocal(AU, h, sub, zeta, q)
        stack = LayerStack((Layer(AU, h),), sub)
    return (np.abs(stack_reflection(stack, zeta, q, "s") - Rs),
            np.abs(stack_reflection(stack, zeta, q, "p") - Rp))


def test_criterion_8_reflection_differences():
    Om = np.geomspace(1e-3, 0.999, 60)[:, None]
    Q = np.linspace(0.0, 1.0, 21)[None, :]
    s_max = max(np.max(_differences(H, Om, Q, SIO2)[0]) for H in (0.1, 1.0, np.inf))
    pairs = {H: _differences(H, 1e-3, 0.5, METAL) for H in (0.1, 1.0, np.inf)}
    p_wins = {H: float(dp) > float(ds) for H, (ds, dp) in pairs.items()}
    shown = "; ".join(f"H={H:g}: dp {float(dp):.2e} vs ds {float(ds):.2e}" for H, (ds, dp) in pairs.items())
    verdict(8, s_max < 0.01 and all(p_wins.values()), f"max |dR_s| = {s_max:.6f}; at Omega=1e-3, Q=0.5: {shown}")


def test_criterion_9_invariant_suites():
    here = Path(__file__).parent
    cmd = [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *(str(here / s) for s in UNIT_SUITES)]
    proc = subprocess.run(cmd, capture_output=True, text=True, cwd=here.parent)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    failed = [ln.split(" - ")[0] for ln in proc.stdout.splitlines() if ln.startswith("FAILED")]
    verdict(9, proc.returncode == 0, tail + (f"; failing: {', '.join(failed)}" if failed else ""))
