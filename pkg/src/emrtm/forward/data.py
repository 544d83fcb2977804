"""Synthetic scattered-field data sets, measurement noise and their file format.

File format (version 1): ``<stem>.bin`` holds little-endian float64 (re, im)
pairs of E^s in row-major (source, receiver, polarization, component) order;
``<stem>.json`` carries the metadata needed to interpret it.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..geometry import Aperture, Scene
from ..green import WaveConfig, dipole_h3, dipole_h3_grad
from ..io import atomic_write_bytes, atomic_write_text
from .mie import AliasingError, default_m_max, mie_eval_scattered, mie_project_incident, mie_solve
from .nystrom import nystrom_solve

__all__ = [
    "ScatterDataSet",
    "SolverError",
    "generate_dataset",
    "modal_solution",
    "add_noise",
    "write_dataset",
    "read_dataset",
    "FORMAT_VERSION",
]

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
E1 = (1.0, 0.0)
E2 = (0.0, 1.0)


class SolverError(RuntimeError):
    """Forward solve failed; ``indices`` names the offending (source, polarization)."""

    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = indices


@dataclass
class ScatterDataSet:
    """Scattered electric field E^s[s, r, p, component] for one wave number."""

    values: np.ndarray
    aperture: Aperture
    wave: WaveConfig
    polarizations: np.ndarray
    scene_digest: str
    solver: str
    noise: dict = field(default_factory=lambda: {"level": 0.0, "seed": None})

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        self.polarizations = np.asarray(self.polarizations, dtype=float).reshape(-1, 2)
        shape = (self.aperture.n_s, self.aperture.n_r, len(self.polarizations), 2)
        if self.values.shape != shape:
            raise ValueError(f"data shape {self.values.shape} does not match aperture/polarizations {shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("data contain non-finite entries")

    def metadata(self):
        return {
            "format_version": FORMAT_VERSION,
            "shape": list(self.values.shape),
            "layout": "source,receiver,polarization,component; float64 little-endian (re, im)",
            "aperture": self.aperture.to_dict(),
            "wave": self.wave.to_dict(),
            "polarizations": self.polarizations.tolist(),
            "scene_digest": self.scene_digest,
            "solver": self.solver,
            "noise": dict(self.noise),
        }

    def digest(self):
        """sha256 of the serialized tensor and its metadata."""
        h = hashlib.sha256(np.ascontiguousarray(self.values).astype("<c16").tobytes())
        h.update(json.dumps(self.metadata(), sort_keys=True).encode())
        return h.hexdigest()


def _polarizations(polarizations):
    p = np.asarray(polarizations, dtype=float).reshape(-1, 2)
    norms = np.hypot(p[:, 0], p[:, 1])
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise ValueError("polarizations must be unit vectors")
    return p


def _select_solver(scene, solver):
    if solver != "auto":
        return solver
    if len(scene) == 1 and scene.components[0].boundary.kind == "circle":
        bc = scene.components[0].bc
        if bc.kind != "impedance" or bc.eta_constant:
            return "mie"
    return "nystrom"


def generate_dataset(scene, aperture, wave, polarizations=(E1,), solver="auto", points_per_wavelength=10):
    """Scattered E at every receiver for every source and polarization.

    ``solver`` is ``"auto"`` (modal for a single circle, Nystrom otherwise),
    ``"mie"`` or ``"nystrom"``.
    """
    pols = _polarizations(polarizations)
    ns, nr, npol = aperture.n_s, aperture.n_r, len(pols)
    digest = scene.digest()
    if scene.is_empty:
        return ScatterDataSet(np.zeros((ns, nr, npol, 2), complex), aperture, wave, pols, digest, "none")
    which = _select_solver(scene, solver)
    if which == "mie":
        values = _mie_data(scene, aperture, wave, pols)
    elif which == "nystrom":
        values = _nystrom_data(scene, aperture, wave, pols, points_per_wavelength)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    _check_finite(values)
    return ScatterDataSet(values, aperture, wave, pols, digest, which)


def _check_finite(values):
    bad = ~np.all(np.isfinite(values), axis=(1, 3))
    if np.any(bad):
        s, p = np.argwhere(bad)[0]
        raise SolverError(f"non-finite scattered field for source {s}, polarization {p}", (int(s), int(p)))


MAX_MODE_GROWTH = 4


def _modal_coefficients(comp, wave, xs, p):
    """Incident modal coefficients of dipoles at ``xs`` with moments ``p`` (broadcast).

    The truncation order starts from the default rule and grows whenever the
    projected coefficients have not decayed at |m| = M_max.
    """
    radius = comp.boundary.radius
    center = np.asarray(comp.boundary.center)
    m_max = default_m_max(wave.k, radius)
    for attempt in range(MAX_MODE_GROWTH + 1):
        nsamp = int(2 ** np.ceil(np.log2(max(4 * m_max, 64))))
        th = 2 * np.pi * np.arange(nsamp) / nsamp
        unit = np.stack([np.cos(th), np.sin(th)], -1)
        pts = center + radius * unit
        h = dipole_h3(pts, xs, p, wave)
        dr = np.sum(dipole_h3_grad(pts, xs, p, wave) * unit, axis=-1)
        try:
            a, mismatch = mie_project_incident(h, dr, radius, wave, m_max)
        except AliasingError:
            if attempt == MAX_MODE_GROWTH:
                raise
            m_max += max(8, m_max // 4)
            log.debug("raising modal truncation to M_max = %d", m_max)
            continue
        log.debug("modal projection mismatch %.2e at M_max = %d", mismatch, m_max)
        return a


def _mie_data(scene, aperture, wave, pols):
    comp = scene.components[0]
    if comp.boundary.kind != "circle":
        raise ValueError("the modal solver needs a single circular scatterer")
    # (source, polarization, sample)
    xs = aperture.sources[:, None, None, :]
    p = pols[None, :, None, :]
    a = _modal_coefficients(comp, wave, xs, p)
    sol = mie_solve(a, comp.bc, comp.boundary.radius, wave, center=np.asarray(comp.boundary.center))
    _, e = mie_eval_scattered(sol, aperture.receivers)
    # e: (source, polarization, receiver, 2) -> (source, receiver, polarization, 2)
    return np.ascontiguousarray(np.transpose(e, (0, 2, 1, 3)))


def modal_solution(scene, source, polarization, wave):
    """Modal solution for one dipole source and a single circular scatterer."""
    if len(scene) != 1 or scene.components[0].boundary.kind != "circle":
        raise ValueError("the modal solver needs a single circular scatterer")
    comp = scene.components[0]
    a = _modal_coefficients(comp, wave, np.asarray(source, dtype=float), np.asarray(polarization, dtype=float))
    return mie_solve(a, comp.bc, comp.boundary.radius, wave, center=np.asarray(comp.boundary.center))


def _nystrom_data(scene, aperture, wave, pols, ppw):
    system = nystrom_solve(scene, wave, points_per_wavelength=ppw)
    nodes = system.nodes
    src = aperture.sources
    ns, npol = len(src), len(pols)
    # incident trace for every (source, polarization): (nodes, ns*npol)
    h = dipole_h3(nodes[:, None, None, :], src[None, :, None, :], pols[None, None, :, :], wave)
    u = system.solve(h.reshape(len(nodes), ns * npol))
    if system.residual > 1e-10:
        log.warning("Nystrom solve residual %.2e above 1e-10", system.residual)
    e = system.scattered_e(aperture.receivers, u)  # (receiver, ns*npol, 2)
    e = e.reshape(aperture.n_r, ns, npol, 2)
    return np.ascontiguousarray(np.transpose(e, (1, 0, 2, 3)))


def add_noise(data, level, seed):
    """Additive complex Gaussian noise E + level * eps.

    Real and imaginary parts of every vector component receive independent
    N(0, sigma^2) draws, sigma = max |E^s| over the clean tensor (vector
    magnitude), scaled by ``level``.
    """
    if level < 0:
        raise ValueError("noise level must be non-negative")
    if level == 0:
        return replace(data, values=data.values.copy(), noise={"level": 0.0, "seed": seed})
    sigma = float(np.max(np.sqrt(np.sum(np.abs(data.values) ** 2, axis=-1)), initial=0.0))
    rng = np.random.default_rng(seed)
    shape = data.values.shape
    eps = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    noisy = data.values + level * sigma * eps
    record = {"level": float(level), "seed": int(seed), "sigma": sigma, "model": "componentwise complex gaussian"}
    return replace(data, values=noisy, noise=record)


def write_dataset(data, stem):
    """Write ``stem.bin`` and ``stem.json``; returns the two paths."""
    stem = str(stem)
    raw = np.ascontiguousarray(data.values).astype("<c16").tobytes()
    atomic_write_bytes(stem + ".bin", raw)
    atomic_write_text(stem + ".json", json.dumps(data.metadata(), indent=2, sort_keys=True))
    return stem + ".bin", stem + ".json"


def read_dataset(stem):
    stem = str(stem)
    if stem.endswith(".bin") or stem.endswith(".json"):
        stem = stem.rsplit(".", 1)[0]
    with open(stem + ".json") as fh:
        meta = json.load(fh)
    if meta.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported data format version {meta.get('format_version')!r}")
    values = np.fromfile(stem + ".bin", dtype="<c16").reshape(meta["shape"])
    ap = meta["aperture"]
    return ScatterDataSet(
        values.astype(complex),
        Aperture(ap["n_s"], ap["r_s"], ap["n_r"], ap["r_r"]),
        WaveConfig(meta["wave"]["k"]),
        np.asarray(meta["polarizations"]),
        meta["scene_digest"],
        meta["solver"],
        meta["noise"],
    )
