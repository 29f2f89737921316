"""Scenario files: a versioned JSON document turned into model objects.

Every section is optional and falls back to the reference LTE macro
scenario (12 three-sector sites, 500 m ISD, 49 dBm, sigma 8 dB, rho 0.5,
20 MHz, 0.1 dB grid, 10 m area grid).  Unknown keys are rejected and
errors name the offending field and, where it can be found, its line.
"""
from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import asdict, dataclass, field

from . import deployment as dep
from . import model as m
from .montecarlo import SimConfig

SCHEMA_VERSION = 1
MODES = ("best-server", "distance", "pathloss")


class ConfigError(ValueError):
    def __init__(self, path, message, line=None):
        self.path = path
        self.line = line
        where = path or "<root>"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}")


def _default_document():
    return {
        "schema_version": SCHEMA_VERSION,
        "deployment": {"preset": "paper12", "inter_site_distance_m": 500.0, "triangle": "sector-edge"},
        "propagation": asdict(dep.PropagationModel()),
        "antenna": {k: v for k, v in asdict(dep.AntennaPattern()).items() if k != "boresight_azimuth_deg"},
        "transmit_power_dbm": 49.0,
        "ue_antenna_gain_dbi": 0.0,
        "shadowing": {"sigma_db": 8.0, "rho": 0.5},
        "noise": {"enabled": True, "noise_figure_db": 9.0, "thermal_density_dbm_per_hz": -174.0},
        "grid": asdict(m.GridSpec()),
        "association": "best-server",
        "targets": {"points": {}, "area": None},
        "thresholds_db": [-8.0, -6.0, -4.0, -2.0, 0.0],
        "simulation": {"num_samples": 1_000_000, "seed": 1, "probe_levels": [1e-2, 1e-3, 1e-4, 1e-5],
                       "thresholds_db": None, "shadowing": None},
        "compare": {"ks_tolerance": 0.005, "min_probe_level": 1e-4},
    }


# expected type of every leaf; dicts recurse, "*" means free-form keys
_NUM = (int, float)
_SCHEMA = {
    "schema_version": int,
    "deployment": {
        "preset": str, "inter_site_distance_m": _NUM, "triangle": str,
        "rings": int, "sectors_per_site": int, "azimuth_offset_deg": _NUM,
        "sites": list,
    },
    "propagation": {k: _NUM for k in asdict(dep.PropagationModel())} | {"min_distance_m": (int, float, type(None))},
    "antenna": {"kind": str} | {k: _NUM for k in asdict(dep.AntennaPattern()) if k not in ("kind", "boresight_azimuth_deg")},
    "transmit_power_dbm": _NUM,
    "ue_antenna_gain_dbi": _NUM,
    "shadowing": {"sigma_db": _NUM, "rho": _NUM},
    "noise": {"enabled": bool, "noise_figure_db": _NUM, "thermal_density_dbm_per_hz": _NUM},
    "grid": {k: _NUM for k in asdict(m.GridSpec())},
    "association": str,
    "targets": {"points": dict, "area": (dict, type(None))},
    "thresholds_db": list,
    "simulation": {"num_samples": _NUM, "seed": int, "probe_levels": list,
                   "thresholds_db": (list, type(None)), "shadowing": (dict, type(None))},
    "compare": {"ks_tolerance": _NUM, "min_probe_level": _NUM},
}
_AREA_KEYS = {"polygon", "spacing_m"}
_SITE_KEYS = {"position", "sectors"}
_SECTOR_KEYS = {"transmit_power_dbm", "antenna"}


def _line_of(text, path):
    """Best-effort line number of the key at ``path`` in the JSON source."""
    if text is None or not path:
        return None
    pos = 0
    for part in re.split(r"\.|\[\d+\]", path):
        if not part:
            continue
        hit = text.find(f'"{part}"', pos)
        if hit < 0:
            return None
        pos = hit
    return text.count("\n", 0, pos) + 1


def _merge(default, user, schema, path, text):
    if not isinstance(user, dict):
        raise ConfigError(path, "expected an object", _line_of(text, path))
    out = copy.deepcopy(default)
    for key, value in user.items():
        sub = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(sub, "unknown key", _line_of(text, sub))
        kind = schema[key]
        if isinstance(kind, dict):
            out[key] = _merge(default.get(key) or {}, value, kind, sub, text)
            continue
        types = kind if isinstance(kind, tuple) else (kind,)
        # bools are ints in Python but never valid numbers here
        bad = isinstance(value, bool) and bool not in types
        if bad or not isinstance(value, types):
            names = "/".join(t.__name__ for t in types)
            raise ConfigError(sub, f"expected {names}, got {type(value).__name__}", _line_of(text, sub))
        out[key] = value
    return out


@dataclass
class Scenario:
    """A fully resolved scenario plus the document it came from."""

    document: dict
    deployment: dep.Deployment
    shadowing: m.ShadowingModel
    noise: m.NoiseModel
    grid: m.GridSpec
    mode: str
    points: dict
    area: dict | None
    thresholds_db: list
    sim: SimConfig
    sim_shadowing: m.ShadowingModel
    sim_thresholds_db: list | None
    ks_tolerance: float
    min_probe_level: float
    area_polygon: list | None = field(default=None)

    def targets(self):
        return list(self.points.items())


def _check(cond, path, message, text):
    if not cond:
        raise ConfigError(path, message, _line_of(text, path))


def _deployment(doc, text):
    d = doc["deployment"]
    prop = dep.PropagationModel(**doc["propagation"])
    pattern = dep.AntennaPattern(**doc["antenna"])
    template = dep.Sector(doc["transmit_power_dbm"], pattern)
    spp = d.get("sectors_per_site", 1 if pattern.kind == "omni" else 3)
    isd = float(d.get("inter_site_distance_m", 500.0))
    if "sites" in d:
        sites = []
        for k, s in enumerate(d["sites"]):
            path = f"deployment.sites[{k}]"
            _check(isinstance(s, dict), path, "expected an object", text)
            extra = set(s) - _SITE_KEYS
            _check(not extra, f"{path}.{sorted(extra)[0] if extra else ''}", "unknown key", text)
            pos = s.get("position")
            _check(isinstance(pos, list) and len(pos) == 2 and all(isinstance(v, _NUM) for v in pos),
                   f"{path}.position", "expected [x, y]", text)
            sectors = []
            for q, sec in enumerate(s.get("sectors", [{"antenna": {"kind": pattern.kind}}])):
                spath = f"{path}.sectors[{q}]"
                extra = set(sec) - _SECTOR_KEYS
                _check(not extra, spath, f"unknown key {sorted(extra)}", text)
                ant = dict(doc["antenna"]) | sec.get("antenna", {})
                sectors.append(dep.Sector(sec.get("transmit_power_dbm", doc["transmit_power_dbm"]),
                                          dep.AntennaPattern(**ant)))
            sites.append(dep.Site(tuple(pos), sectors))
        return dep.Deployment(tuple(sites), prop, doc["ue_antenna_gain_dbi"])
    if "rings" in d:
        _check("preset" not in d or d.get("preset") is None, "deployment.preset",
               "give either a preset or rings, not both", text)
        return dep.build_hex_grid(d["rings"], isd, template, spp, prop, doc["ue_antenna_gain_dbi"],
                                  d.get("azimuth_offset_deg", 0.0))
    preset = d.get("preset", "paper12")
    _check(preset == "paper12", "deployment.preset", f"unknown preset {preset!r}", text)
    return dep.paper12(isd, template, spp, prop, doc["ue_antenna_gain_dbi"], d.get("triangle", "sector-edge"))


def _mode(value, path, text, num_sites):
    if value in MODES:
        return value
    if isinstance(value, str) and value.startswith("site:"):
        try:
            i = int(value.split(":", 1)[1])
        except ValueError:
            i = -1
        _check(0 <= i < num_sites, path, f"site index out of range in {value!r}", text)
        return value
    raise ConfigError(path, f"unknown association mode {value!r}", _line_of(text, path))


def _shadowing(sec):
    return m.ShadowingModel(float(sec["sigma_db"]), float(sec["rho"]))


def resolve(document, text=None):
    """Validate ``document`` and build a :class:`Scenario`."""
    if not isinstance(document, dict):
        raise ConfigError("", "the scenario must be a JSON object")
    version = document.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version!r} (expected {SCHEMA_VERSION})",
                          _line_of(text, "schema_version"))
    doc = _merge(_default_document(), document, _SCHEMA, "", text)
    if "deployment" in document:
        # a user deployment section replaces the default one instead of merging into it
        doc["deployment"] = _merge({}, document["deployment"], _SCHEMA["deployment"], "deployment", text)
    try:
        deployment = _deployment(doc, text)
        shadowing = _shadowing(doc["shadowing"])
        sim_sh = doc["simulation"]["shadowing"]
        if sim_sh is not None:
            _merge({}, sim_sh, _SCHEMA["shadowing"], "simulation.shadowing", text)
            sim_shadowing = _shadowing(doc["shadowing"] | sim_sh)
        else:
            sim_shadowing = shadowing
        n = doc["noise"]
        noise = m.NoiseModel(n["thermal_density_dbm_per_hz"], n["noise_figure_db"],
                             doc["propagation"]["bandwidth_hz"], n["enabled"])
        grid = m.GridSpec(**doc["grid"])
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("", str(exc)) from exc
    _check(grid.step_db > 0 and grid.span_below_db > 0 and grid.span_above_db > 0,
           "grid", "step and spans must be positive", text)
    mode = _mode(doc["association"], "association", text, deployment.num_sites)
    points = {}
    for name, p in doc["targets"]["points"].items():
        path = f"targets.points.{name}"
        _check(isinstance(p, list) and len(p) == 2 and all(isinstance(v, _NUM) and math.isfinite(v) for v in p),
               path, "expected [x, y]", text)
        points[str(name)] = (float(p[0]), float(p[1]))
    area = doc["targets"]["area"]
    polygon = None
    if area is not None:
        extra = set(area) - _AREA_KEYS
        _check(not extra, f"targets.area.{sorted(extra)[0] if extra else ''}", "unknown key", text)
        poly = area.get("polygon", "triangle")
        if poly == "triangle":
            polygon = dep.evaluation_triangle(deployment)
        else:
            _check(isinstance(poly, list) and len(poly) >= 3, "targets.area.polygon",
                   'expected "triangle" or a list of at least three [x, y] vertices', text)
            polygon = [tuple(map(float, v)) for v in poly]
        spacing = area.get("spacing_m", 10.0)
        _check(isinstance(spacing, _NUM) and spacing > 0, "targets.area.spacing_m", "must be positive", text)
        area = {"polygon": polygon, "spacing_m": float(spacing)}
    for key in ("thresholds_db",):
        _check(all(isinstance(v, _NUM) for v in doc[key]), key, "expected a list of numbers", text)
    s = doc["simulation"]
    _check(s["num_samples"] >= 1 and float(s["num_samples"]).is_integer(), "simulation.num_samples",
           "must be a positive integer", text)
    _check(all(isinstance(v, _NUM) and 0 < v < 1 for v in s["probe_levels"]), "simulation.probe_levels",
           "levels must lie in (0, 1)", text)
    sim = SimConfig(int(s["num_samples"]), int(s["seed"]), mode, tuple(float(v) for v in s["probe_levels"]))
    c = doc["compare"]
    return Scenario(doc, deployment, shadowing, noise, grid, mode, points, area,
                    [float(v) for v in doc["thresholds_db"]], sim, sim_shadowing,
                    None if s["thresholds_db"] is None else [float(v) for v in s["thresholds_db"]],
                    float(c["ks_tolerance"]), float(c["min_probe_level"]), polygon)


def loads(text):
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc.msg}", exc.lineno) from exc
    return resolve(document, text)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def with_overrides(scenario, *, seed=None, samples=None, grid_step=None, mode=None):
    """Re-resolve ``scenario`` with command-line overrides applied to its document."""
    doc = copy.deepcopy(scenario.document)
    if seed is not None:
        doc["simulation"]["seed"] = int(seed)
    if samples is not None:
        doc["simulation"]["num_samples"] = int(samples)
    if grid_step is not None:
        doc["grid"]["step_db"] = float(grid_step)
    if mode is not None:
        doc["association"] = mode
    return resolve(doc)
