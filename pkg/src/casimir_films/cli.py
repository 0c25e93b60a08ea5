"""Command-line scenario runner: config file in, CSV out.

    casimir-films run table1            # bundled scenario by name
    casimir-films run my.cfg --out x.csv --tol 1e-6 --threads 4
    casimir-films --list

Exit status: 0 success, 1 configuration error, 2 every row failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, parse_file, parse_text
from .constants import HBAR_C
from .lifshitz import NONLOCAL, ForceJob, Tolerances, force_pp, percent_of
from .reflection_local import Layer, LayerStack, stack_reflection
from .reflection_nonlocal import film_reflection_nonlocal, halfspace_reflection_nonlocal

FORCE_COLUMNS = (
    "a_nm", "h_nm", "substrate", "F_local_Pa", "F_nonlocal_Pa",
    "delta_percent", "n_matsubara", "quad_err", "error",
)
REFLECTION_COLUMNS = ("Omega", "Q", "H", "polarization", "R_local", "R_nonlocal", "delta_R", "error")
THREADS_ENV = "CASIMIR_THREADS"
_NUMERIC_ERRORS = (ArithmeticError, ValueError)


def _num(x):
    return format(float(x), ".12g")


def bundled_scenarios():
    """{name: path} of the scenario files shipped with the package."""
    root = resources.files("casimir_films") / "scenarios"
    return {p.name[:-4]: p for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".cfg")}


def list_scenarios():
    lines = []
    for name, path in bundled_scenarios().items():
        cfg = parse_text(path.read_text(encoding="utf-8"), path.name)
        lines.append(f"{name:8s}  {cfg.description}")
    return "\n".join(lines)


def load_config(ref) -> ScenarioConfig:
    """A config path, or the name of a bundled scenario."""
    if not os.path.exists(ref):
        bundled = bundled_scenarios()
        if ref in bundled:
            return parse_text(bundled[ref].read_text(encoding="utf-8"), f"{ref}.cfg")
    return parse_file(ref)


def _force_points(cfg: ScenarioConfig):
    s = cfg.sweep
    subs = s.substrates or (None,)
    hs = s.thicknesses or (None,)
    # the named sweep variable runs fastest
    if s.type == "thickness":
        return [(a, h, sub) for sub in subs for a in s.separations for h in hs]
    if s.type == "substrate":
        return [(a, h, sub) for h in hs for a in s.separations for sub in subs]
    return [(a, h, sub) for sub in subs for h in hs for a in s.separations]


def _force_row(cfg: ScenarioConfig, point):
    a, h, sub = point
    vary = cfg.sweep.vary
    plates = [
        cfg.plate(i, h if i + 1 in vary else None, sub if i + 1 in vary else None) for i in (0, 1)
    ]
    h_out = h if h is not None else next((p.layers[0][1] for p in cfg.plates if p.layers), float("inf"))
    sub_out = sub if sub is not None else cfg.plates[-1].substrate
    row = {"a_nm": _num(a), "h_nm": _num(h_out), "substrate": sub_out}
    try:
        job = ForceJob(plates[0], plates[1], a, cfg.temperature, cfg.tolerances)
        loc = force_pp(job)
        nl = force_pp(job.with_mode(NONLOCAL))
        row.update(
            F_local_Pa=_num(loc.pressure),
            F_nonlocal_Pa=_num(nl.pressure),
            delta_percent=_num(percent_of(loc.pressure, nl.pressure)),
            n_matsubara=str(max(loc.n_terms_used, nl.n_terms_used)),
            quad_err=_num(loc.quad_error_estimate + nl.quad_error_estimate),
            error="",
        )
    except _NUMERIC_ERRORS as exc:
        row.update({k: "" for k in FORCE_COLUMNS[3:8]}, error=f"{type(exc).__name__}: {exc}")
    return row


def _reflection_points(cfg: ScenarioConfig):
    s = cfg.sweep
    return [(H, Q, Om) for H in s.H for Q in s.Q for Om in s.Omega]


def _reflection_row(cfg: ScenarioConfig, point):
    H, Q, Om = point
    s = cfg.sweep
    film = cfg.material(s.film)
    substrate = cfg.material(s.substrate)
    wp = film.params.omega_p
    zeta, q = Om * wp, Q * wp / HBAR_C
    pol = s.polarization
    row = {"Omega": _num(Om), "Q": _num(Q), "H": _num(H), "polarization": pol}
    try:
        if H == 0:
            stack = LayerStack((), substrate)
            r_loc = stack_reflection(stack, zeta, q, pol)
            r_nl, err = r_loc, 0.0
        elif np.isinf(H):
            r_loc = stack_reflection(LayerStack((), film), zeta, q, pol)
            Rs, Rp, err = halfspace_reflection_nonlocal(film, zeta, q)
            r_nl = Rs if pol == "s" else Rp
        else:
            h = H * HBAR_C / wp
            r_loc = stack_reflection(LayerStack((Layer(film, h),), substrate), zeta, q, pol)
            Rs, Rp, err = film_reflection_nonlocal(film, h, LayerStack((), substrate), zeta, q)
            r_nl = Rs if pol == "s" else Rp
        r_loc, r_nl = float(r_loc), float(r_nl)
        row.update(R_local=_num(r_loc), R_nonlocal=_num(r_nl), delta_R=_num(r_loc - r_nl), error="")
    except _NUMERIC_ERRORS as exc:
        row.update(R_local="", R_nonlocal="", delta_R="", error=f"{type(exc).__name__}: {exc}")
    return row


def compute_rows(cfg: ScenarioConfig, threads=1):
    """CSV header and rows (dicts of strings) in sweep order."""
    if cfg.sweep.type == "reflection":
        columns, fn, points = REFLECTION_COLUMNS, _reflection_row, _reflection_points(cfg)
    else:
        columns, fn, points = FORCE_COLUMNS, _force_row, _force_points(cfg)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda p: fn(cfg, p), points))
    else:
        rows = [fn(cfg, p) for p in points]
    return columns, rows


def render_csv(columns, rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_scenario(ref, out=None, tol=None, threads=1):
    """Run one scenario and write its CSV.  Returns (exit status, output path)."""
    cfg = load_config(ref)
    if tol is not None:
        try:
            cfg = replace(cfg, tolerances=Tolerances(tol, tol))
        except ValueError as exc:
            raise ConfigError(str(exc), field="--tol") from None
    columns, rows = compute_rows(cfg, threads)
    path = Path(out) if out else Path(cfg.output)
    write_atomic(path, render_csv(columns, rows))
    failed = sum(1 for r in rows if r["error"])
    return (2 if rows and failed == len(rows) else 0), path


def _threads(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("thread count must be >= 1")
    return n


def build_parser():
    p = argparse.ArgumentParser(
        prog="casimir-films",
        description="Local vs nonlocal Casimir pressure for plates with thin metal films.",
    )
    p.add_argument("--list", action="store_true", help="list bundled scenarios and exit")
    sub = p.add_subparsers(dest="command")
    run = sub.add_parser("run", help="run a scenario file or bundled scenario name")
    run.add_argument("config")
    run.add_argument("--out", help="output CSV path (overrides the config)")
    run.add_argument("--tol", type=float, help="relative tolerance for the Matsubara sum and quadrature")
    run.add_argument(
        "--threads", type=_threads, default=None,
        help=f"worker threads for sweep rows (default ${THREADS_ENV} or 1)",
    )
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list:
        print(list_scenarios())
        return 0
    if args.command != "run":
        parser.print_usage()
        return 0
    threads = args.threads
    if threads is None:
        try:
            threads = _threads(os.environ.get(THREADS_ENV, "1"))
        except (ValueError, argparse.ArgumentTypeError):
            print(f"error: {THREADS_ENV} must be a positive integer", file=sys.stderr)
            return 1
    try:
        status, path = run_scenario(args.config, args.out, args.tol, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    if status == 2:
        print("every row failed; see the error column", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
