"""Scenario files: an INI dialect describing materials, plates and a sweep.

Grammar (``;`` or ``#`` start comments)::

    [scenario]
    name = table1                 ; required
    description = one line        ; shown by --list
    temperature = 300             ; K, default 300
    matsubara_rel = 1e-6          ; optional tolerances
    quad_rel = 1e-7
    output = table1.csv           ; default <name>.csv

    [material.Au]                 ; one section per named material
    model = drude                 ; drude | dielectric
    omega_p = 9.0                 ; eV
    omega_tau = 0.035             ; eV
    v_F = 0.00467                 ; fraction of c
    specularity = 1.0             ; optional, with surface_scattering = yes

    [material.SiO2]
    model = dielectric
    eps = 4

    [plate.1]                     ; force sweeps need plate.1 and plate.2
    layers = Au:2                 ; top first, name:thickness_nm; empty = half-space
    substrate = SiO2              ; material name or "vacuum"

    [sweep]
    type = separation             ; separation | thickness | substrate | reflection
    separations = linspace(50, 500, 10)
    thicknesses = 2, 10, 100      ; replaces the top layer thickness of ``vary`` plates
    substrates = SiO2, vacuum     ; replaces the substrate of ``vary`` plates
    vary = 1, 2

Reflection curves use ``film``, ``substrate``, ``polarization``, ``Omega``,
``Q`` and ``H`` keys in ``[sweep]`` instead of plates.  Numeric lists are
comma separated or written ``linspace(a, b, n)`` / ``logspace(a, b, n)``
(exponents of ten) and must be strictly increasing; ``inf`` is allowed
for H.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .lifshitz import PlateConfig, Tolerances
from .materials import ConstantDielectric, Drude, DrudeParams, SurfaceScattering, Vacuum
from .reflection_local import Layer, LayerStack

SWEEP_TYPES = ("separation", "thickness", "substrate", "reflection")
VACUUM = "vacuum"
_RANGE = re.compile(r"^(linspace|logspace)\(\s*([^,]+),\s*([^,]+),\s*([^,)]+)\)$")


class ConfigError(ValueError):
    """Invalid scenario file, with the offending line and field when known."""

    def __init__(self, message, line=None, field=None, path=None):
        self.line, self.field, self.path = line, field, path
        where = []
        if path:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        super().__init__(f"{': '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class MaterialSpec:
    name: str
    model: str
    params: tuple  # sorted (key, value) pairs

    def build(self):
        p = dict(self.params)
        if self.model == "dielectric":
            return ConstantDielectric(p["eps"])
        surface = SurfaceScattering(p.get("specularity", 1.0), bool(p.get("surface_scattering", 0.0)))
        return Drude(DrudeParams(p["omega_p"], p["omega_tau"], p["v_F"]), surface)


@dataclass(frozen=True)
class PlateSpec:
    layers: tuple  # (material name, thickness nm) pairs, top first
    substrate: str


@dataclass(frozen=True)
class SweepSpec:
    type: str
    separations: tuple = ()
    thicknesses: tuple = ()
    substrates: tuple = ()
    vary: tuple = ()
    # reflection curves
    film: str = ""
    substrate: str = ""
    polarization: str = ""
    Omega: tuple = ()
    Q: tuple = ()
    H: tuple = ()


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    description: str
    temperature: float
    tolerances: Tolerances
    output: str
    materials: tuple  # MaterialSpec, in file order
    plates: tuple  # PlateSpec pair, empty for reflection curves
    sweep: SweepSpec = field(default_factory=lambda: SweepSpec("separation"))

    def material(self, name):
        if name == VACUUM:
            return Vacuum()
        for m in self.materials:
            if m.name == name:
                return m.build()
        raise KeyError(name)

    def material_spec(self, name):
        return next(m for m in self.materials if m.name == name)

    def plate(self, index, thickness=None, substrate=None):
        """PlateConfig of plate ``index`` (0 or 1), optionally overriding
        the top layer thickness and the substrate."""
        spec = self.plates[index]
        layers = [Layer(self.material(n), h) for n, h in spec.layers]
        if thickness is not None and layers:
            layers[0] = Layer(layers[0].material, thickness)
        sub = self.material(substrate if substrate is not None else spec.substrate)
        return PlateConfig(LayerStack(tuple(layers), sub))


def _fmt(x):
    return "inf" if math.isinf(x) else repr(float(x))


def serialize(cfg: ScenarioConfig) -> str:
    """Inverse of :func:`parse_text`; lists are written out explicitly."""
    out = [
        "[scenario]",
        f"name = {cfg.name}",
        f"description = {cfg.description}",
        f"temperature = {_fmt(cfg.temperature)}",
        f"matsubara_rel = {_fmt(cfg.tolerances.matsubara_rel)}",
        f"quad_rel = {_fmt(cfg.tolerances.quad_rel)}",
        f"output = {cfg.output}",
    ]
    for m in cfg.materials:
        out += ["", f"[material.{m.name}]", f"model = {m.model}"]
        out += [f"{k} = {_fmt(v)}" for k, v in m.params]
    for i, p in enumerate(cfg.plates, 1):
        layers = ", ".join(f"{n}:{_fmt(h)}" for n, h in p.layers)
        out += ["", f"[plate.{i}]", f"layers = {layers}", f"substrate = {p.substrate}"]
    s = cfg.sweep
    out += ["", "[sweep]", f"type = {s.type}"]
    if s.type == "reflection":
        out += [
            f"film = {s.film}",
            f"substrate = {s.substrate}",
            f"polarization = {s.polarization}",
        ]
        out += [f"{k} = {', '.join(map(_fmt, getattr(s, k)))}" for k in ("Omega", "Q", "H")]
    else:
        out.append(f"separations = {', '.join(map(_fmt, s.separations))}")
        if s.thicknesses:
            out.append(f"thicknesses = {', '.join(map(_fmt, s.thicknesses))}")
        if s.substrates:
            out.append(f"substrates = {', '.join(s.substrates)}")
        if s.vary:
            out.append(f"vary = {', '.join(map(str, s.vary))}")
    return "\n".join(out) + "\n"


class _Reader:
    """configparser plus a (section, key) -> line number table."""

    def __init__(self, text, path):
        self.path = path
        self.cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
        self.cp.optionxform = str
        try:
            self.cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None), path=path) from None
        self.lines = {}
        section = None
        for no, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                self.lines[(section, None)] = no
            elif section and "=" in line and not line.startswith((";", "#")):
                self.lines.setdefault((section, line.split("=", 1)[0].strip()), no)

    def error(self, message, section, key=None):
        line = self.lines.get((section, key), self.lines.get((section, None)))
        return ConfigError(message, line, key or section, self.path)

    def get(self, section, key, default=None):
        if not self.cp.has_option(section, key):
            if default is None:
                raise self.error("missing required field", section, key)
            return default
        return self.cp.get(section, key).strip()

    def number(self, section, key, default=None):
        raw = self.get(section, key, None if default is None else str(default))
        try:
            return float(raw)
        except ValueError:
            raise self.error(f"not a number: {raw!r}", section, key) from None

    def numbers(self, section, key, allow_inf=False, required=True):
        if not self.cp.has_option(section, key):
            if required:
                raise self.error("missing required field", section, key)
            return ()
        raw = self.cp.get(section, key).strip()
        m = _RANGE.match(raw)
        try:
            if m:
                kind, lo, hi, n = m.groups()
                n_pts = int(n)
                if n_pts < 1:
                    raise ValueError
                fn = np.linspace if kind == "linspace" else np.logspace
                values = [float(v) for v in fn(float(lo), float(hi), n_pts)]
            else:
                values = [float(v) for v in raw.split(",") if v.strip()]
        except ValueError:
            raise self.error(f"malformed number list: {raw!r}", section, key) from None
        if not values:
            raise self.error("list is empty", section, key)
        if any(math.isnan(v) or (math.isinf(v) and not allow_inf) for v in values):
            raise self.error("non-finite value in list", section, key)
        if any(b <= a for a, b in zip(values, values[1:])):
            raise self.error("list must be strictly increasing", section, key)
        return tuple(values)

    def names(self, section, key, required=True):
        if not self.cp.has_option(section, key):
            if required:
                raise self.error("missing required field", section, key)
            return ()
        values = tuple(v.strip() for v in self.cp.get(section, key).split(",") if v.strip())
        if not values:
            raise self.error("list is empty", section, key)
        if len(set(values)) != len(values):
            raise self.error("duplicate entries", section, key)
        return values


def _material(r: _Reader, section, name):
    model = r.get(section, "model").lower()
    if model == "dielectric":
        params = {"eps": r.number(section, "eps")}
    elif model == "drude":
        params = {k: r.number(section, k) for k in ("omega_p", "omega_tau", "v_F")}
        if r.cp.has_option(section, "specularity"):
            params["specularity"] = r.number(section, "specularity")
        if r.cp.has_option(section, "surface_scattering"):
            try:
                params["surface_scattering"] = float(r.cp.getboolean(section, "surface_scattering"))
            except ValueError:
                raise r.error("expected yes/no", section, "surface_scattering") from None
    else:
        raise r.error(f"unknown model {model!r} (drude or dielectric)", section, "model")
    spec = MaterialSpec(name, model, tuple(sorted(params.items())))
    try:
        spec.build()
    except ValueError as exc:
        raise r.error(str(exc), section) from None
    return spec


def _plate(r: _Reader, section, known):
    layers = []
    raw = r.cp.get(section, "layers", fallback="").strip()
    for item in filter(None, (s.strip() for s in raw.split(","))):
        name, sep, h = item.partition(":")
        name = name.strip()
        if not sep or name not in known:
            raise r.error(f"bad layer {item!r}, expected known_material:thickness_nm", section, "layers")
        try:
            thickness = float(h)
        except ValueError:
            raise r.error(f"bad thickness in {item!r}", section, "layers") from None
        if not (thickness > 0 and math.isfinite(thickness)):
            raise r.error(f"thickness must be > 0 in {item!r}", section, "layers")
        layers.append((name, thickness))
    substrate = r.get(section, "substrate")
    if substrate not in known:
        raise r.error(f"unknown material {substrate!r}", section, "substrate")
    return PlateSpec(tuple(layers), substrate)


def parse_text(text, path=None) -> ScenarioConfig:
    r = _Reader(text, path)
    if not r.cp.has_section("scenario"):
        raise ConfigError("missing [scenario] section", path=path)
    name = r.get("scenario", "name")
    description = r.get("scenario", "description", "")
    temperature = r.number("scenario", "temperature", 300.0)
    if not temperature > 0:
        raise r.error("temperature must be > 0 K", "scenario", "temperature")
    try:
        tol = Tolerances(
            r.number("scenario", "matsubara_rel", Tolerances.matsubara_rel),
            r.number("scenario", "quad_rel", Tolerances.quad_rel),
        )
    except ValueError as exc:
        raise r.error(str(exc), "scenario") from None
    output = r.get("scenario", "output", f"{name}.csv")

    materials = []
    for section in r.cp.sections():
        if section.startswith("material."):
            mname = section.split(".", 1)[1].strip()
            if not mname or mname == VACUUM:
                raise r.error("invalid material name", section)
            materials.append(_material(r, section, mname))
    known = {m.name for m in materials} | {VACUUM}
    for section in r.cp.sections():
        if section not in ("scenario", "sweep") and not re.fullmatch(r"(material\..+|plate\.[12])", section):
            raise r.error("unknown section", section)

    if not r.cp.has_section("sweep"):
        raise ConfigError("missing [sweep] section", path=path)
    stype = r.get("sweep", "type").lower()
    if stype not in SWEEP_TYPES:
        raise r.error(f"unknown sweep type {stype!r}, one of {', '.join(SWEEP_TYPES)}", "sweep", "type")

    if stype == "reflection":
        film = r.get("sweep", "film")
        substrate = r.get("sweep", "substrate")
        for key, val in (("film", film), ("substrate", substrate)):
            if val not in known:
                raise r.error(f"unknown material {val!r}", "sweep", key)
        if film == VACUUM or next(m for m in materials if m.name == film).model != "drude":
            raise r.error("reflection curves need a Drude film", "sweep", "film")
        pol = r.get("sweep", "polarization")
        if pol not in ("s", "p"):
            raise r.error("polarization must be s or p", "sweep", "polarization")
        sweep = SweepSpec(
            "reflection", film=film, substrate=substrate, polarization=pol,
            Omega=r.numbers("sweep", "Omega"), Q=r.numbers("sweep", "Q"), H=r.numbers("sweep", "H", allow_inf=True),
        )
        if sweep.Omega[0] <= 0:
            raise r.error("Omega must be > 0", "sweep", "Omega")
        if sweep.Q[0] < 0 or sweep.H[0] < 0:
            raise r.error("Q and H must be >= 0", "sweep", "Q" if sweep.Q[0] < 0 else "H")
        return ScenarioConfig(name, description, temperature, tol, output, tuple(materials), (), sweep)

    plates = []
    for i in (1, 2):
        section = f"plate.{i}"
        if not r.cp.has_section(section):
            raise ConfigError(f"missing [{section}] section", path=path)
        plates.append(_plate(r, section, known))
    separations = r.numbers("sweep", "separations")
    if separations[0] <= 0:
        raise r.error("separations must be > 0 nm", "sweep", "separations")
    thicknesses = r.numbers("sweep", "thicknesses", required=stype == "thickness")
    if thicknesses and thicknesses[0] <= 0:
        raise r.error("thicknesses must be > 0 nm", "sweep", "thicknesses")
    substrates = r.names("sweep", "substrates", required=stype == "substrate")
    for s in substrates:
        if s not in known:
            raise r.error(f"unknown material {s!r}", "sweep", "substrates")
    vary = ()
    if thicknesses or substrates:
        try:
            vary = tuple(int(v) for v in r.names("sweep", "vary"))
        except ValueError:
            raise r.error("vary must list plate numbers 1 and/or 2", "sweep", "vary") from None
        if not vary or any(v not in (1, 2) for v in vary):
            raise r.error("vary must list plate numbers 1 and/or 2", "sweep", "vary")
        if thicknesses and any(not plates[v - 1].layers for v in vary):
            raise r.error("thickness sweep on a plate without layers", "sweep", "vary")
    sweep = SweepSpec(stype, separations, thicknesses, substrates, vary)
    return ScenarioConfig(name, description, temperature, tol, output, tuple(materials), tuple(plates), sweep)


def parse_file(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=path) from None
    return parse_text(text, path)
