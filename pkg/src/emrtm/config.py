"""Experiment configuration: YAML text validated against a JSON schema.

A config names the scene, one or more waves, the aperture, the sampling
grid, polarizations, functional variant, optional noise, solver override,
profiles to extract, optional identity checks and the output directory.
See ``configs/schema.json`` for the full schema and the bundled ``*.cfg``
files for examples.
"""
import copy
import hashlib
import json
from dataclasses import dataclass
from importlib import resources

import jsonschema
import yaml

from .geometry import Aperture, BoundaryCondition, Component, ParametricBoundary, SamplingGrid, Scene
from .green import WaveConfig

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "schema", "bundled_configs"]


class ConfigError(ValueError):
    """Config unreadable, not schema-valid or semantically inconsistent."""


def schema():
    text = resources.files("emrtm").joinpath("configs/schema.json").read_text()
    return json.loads(text)


def bundled_configs():
    """Names of the config files shipped with the package."""
    root = resources.files("emrtm").joinpath("configs")
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


@dataclass
class ExperimentConfig:
    raw: dict
    scene: Scene
    waves: list
    aperture: Aperture
    grid: SamplingGrid
    polarizations: list
    variant: str
    noise_level: float
    seed: int
    solver: str
    points_per_wavelength: float
    profiles: list
    verify: dict
    output: str

    def digest(self):
        """sha256 of the canonical JSON form of the config."""
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    @property
    def name(self):
        return self.raw.get("name", "experiment")


def _boundary(d):
    kind = d["kind"]
    center = tuple(d.get("center", (0.0, 0.0)))
    if kind == "circle":
        return ParametricBoundary.circle(d.get("radius", 1.0), center)
    if kind == "kite":
        return ParametricBoundary.kite(d.get("scale", 1.0), center)
    return ParametricBoundary.n_leaf(d.get("n", 5), d.get("scale", 1.0), center)


def _bc(d):
    kind = d["kind"]
    if kind == "pec":
        return BoundaryCondition.pec()
    if kind == "impedance":
        eta = d["eta"]
        return BoundaryCondition.impedance(tuple(eta) if isinstance(eta, list) else eta)
    return BoundaryCondition.penetrable(d["n0"])


def _wave(d):
    if "k" in d:
        return WaveConfig(float(d["k"]))
    return WaveConfig.from_wavelength(float(d["wavelength"]))


def parse_config(raw, seed=None, output=None):
    """Validate a config mapping and build the domain objects.

    ``seed`` and ``output`` override the corresponding config fields; the
    overrides become part of the digested config.
    """
    raw = copy.deepcopy(raw)
    if seed is not None:
        raw.setdefault("noise", {"level": 0.0})
        raw["noise"]["seed"] = int(seed)
    if output is not None:
        raw["output"] = str(output)
    try:
        jsonschema.validate(raw, schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {exc.message}") from None
    try:
        scene = Scene(tuple(Component(_boundary(c["shape"]), _bc(c["bc"])) for c in raw["scene"]))
        waves = [_wave(w) for w in raw["waves"]]
        ap = raw["aperture"]
        aperture = Aperture(ap["n_s"], float(ap["r_s"]), ap["n_r"], float(ap["r_r"]))
        g = raw["grid"]
        grid = SamplingGrid(float(g["a1"]), float(g["b1"]), float(g["a2"]), float(g["b2"]), g["nx"], g["ny"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"config inconsistent: {exc}") from None
    ks = [w.k for w in waves]
    if len(set(ks)) != len(ks):
        raise ConfigError("wavelengths must be distinct")
    pols = [tuple(float(v) for v in p) for p in raw.get("polarizations", [[1.0, 0.0]])]
    for p in pols:
        if abs(p[0] ** 2 + p[1] ** 2 - 1.0) > 1e-12:
            raise ConfigError(f"polarization {list(p)} is not a unit vector")
    noise = raw.get("noise", {})
    return ExperimentConfig(
        raw=raw,
        scene=scene,
        waves=waves,
        aperture=aperture,
        grid=grid,
        polarizations=pols,
        variant=raw.get("variant", "g"),
        noise_level=float(noise.get("level", 0.0)),
        seed=int(noise.get("seed", 0)),
        solver=raw.get("solver", "auto"),
        points_per_wavelength=float(raw.get("points_per_wavelength", 10)),
        profiles=raw.get("profiles", []),
        verify=raw.get("verify", {}),
        output=raw.get("output", "out"),
    )


def load_config(path, seed=None, output=None):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return parse_config(raw, seed=seed, output=output)
