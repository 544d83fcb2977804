"""Reverse time migration imaging functionals.

The single-frequency functional at a sampling point z is

    I(z) = -k^2 Im{ w_s w_r sum_p sum_s sum_r  S(z, x_s) . G(z, x_r)^T conj(E^s[s, r, p]) }

with quadrature weights w = 2 pi R / N on each ring and source-side field
S = g(z, x_s) p (default, ``variant="g"``) or S = G(z, x_s) p
(``variant="dyadic"``). Summing several polarizations gives the
multi-polarization functional.
"""
import csv
import io as _io
import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import SamplingGrid
from .green import dyadic_g2, g2
from .io import atomic_write_bytes, atomic_write_text
from .kernels import backpropagate_sum, correlate

__all__ = [
    "ImageGrid",
    "back_propagate",
    "image",
    "image_points",
    "image_multifreq",
    "sum_images",
    "cross_section",
    "write_image",
    "read_image",
    "write_profile_csv",
    "IMAGE_FORMAT_VERSION",
]

IMAGE_FORMAT_VERSION = 1
VARIANTS = ("g", "dyadic")
_TILE_BYTES = 48 * 2**20


@dataclass
class ImageGrid:
    grid: SamplingGrid
    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError("image values do not match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("image contains non-finite values")


def back_propagate(data, z, s, p):
    """Back-propagated field F_b(z, x_s) = -w_r sum_r G(z, x_r)^T conj(E^s[s, r, p]).

    ``z`` may be a single point (2,) or an array (..., 2).
    """
    z = np.asarray(z, dtype=float)
    flat = z.reshape(-1, 2)
    G = dyadic_g2(flat[:, None, :], data.aperture.receivers[None, :, :], data.wave)
    fb = -data.aperture.w_r * backpropagate_sum(G, np.conj(data.values[s, :, p, :]))
    return fb.reshape(z.shape[:-1] + (2,))


def _select_polarizations(data, polarizations):
    if polarizations is None:
        return np.arange(len(data.polarizations))
    want = np.asarray(polarizations, dtype=float).reshape(-1, 2)
    idx = []
    for q in want:
        hit = np.flatnonzero(np.all(np.abs(data.polarizations - q) < 1e-12, axis=1))
        if not len(hit):
            raise ValueError(f"polarization {q.tolist()} not present in the data")
        idx.append(int(hit[0]))
    return np.asarray(idx)


def image_points(data, z, polarizations=None, variant="g", backend=None):
    """Imaging functional at arbitrary points z of shape (..., 2)."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown functional variant {variant!r}")
    z = np.asarray(z, dtype=float)
    flat = z.reshape(-1, 2)
    pidx = _select_polarizations(data, polarizations)
    pols = data.polarizations[pidx]
    cE = np.ascontiguousarray(np.conj(data.values[:, :, pidx, :]))
    ap = data.aperture
    k = data.wave.k
    per_point = 16 * (ap.n_r * 4 + ap.n_s * len(pidx) * (2 if variant == "g" else 6))
    tile = max(1, _TILE_BYTES // per_point)
    out = np.empty(len(flat))
    for lo in range(0, len(flat), tile):
        zt = flat[lo:lo + tile]
        G = dyadic_g2(zt[:, None, :], ap.receivers[None, :, :], data.wave)
        if variant == "g":
            gs = g2(zt[:, None, :], ap.sources[None, :, :], data.wave)
            S = gs[:, :, None, None] * pols[None, None, :, :]
        else:
            Gs = dyadic_g2(zt[:, None, :], ap.sources[None, :, :], data.wave)
            S = np.einsum("zsij,pj->zspi", Gs, pols)
        c = correlate(S, G, cE, backend=backend)
        out[lo:lo + tile] = -k * k * ap.w_s * ap.w_r * c.imag
    return out.reshape(z.shape[:-1])


def image(data, grid, polarizations=None, variant="g", backend=None):
    """Imaging functional on a sampling grid."""
    vals = image_points(data, grid.points(), polarizations, variant, backend)
    pidx = _select_polarizations(data, polarizations)
    prov = {
        "waves": [data.wave.to_dict()],
        "polarizations": data.polarizations[pidx].tolist(),
        "scene_digest": data.scene_digest,
        "variant": variant,
        "weights": {"w_s": data.aperture.w_s, "w_r": data.aperture.w_r, "convention": "2 pi R / N"},
        "noise": [dict(data.noise)],
        "dataset_digests": [data.digest()],
        "aperture": data.aperture.to_dict(),
    }
    return ImageGrid(grid, vals, prov)


def image_multifreq(datasets, grid, polarizations=None, variant="g", backend=None):
    """Pointwise sum of single-frequency images."""
    datasets = list(datasets)
    if not datasets:
        raise ValueError("no data sets given")
    first = datasets[0]
    for d in datasets[1:]:
        if d.scene_digest != first.scene_digest:
            raise ValueError("data sets describe different scenes")
        if d.aperture != first.aperture:
            raise ValueError("data sets use different apertures")
    return sum_images([image(d, grid, polarizations, variant, backend) for d in datasets])


def sum_images(images):
    """Pointwise sum of images on a common grid, merging their provenance."""
    images = list(images)
    if not images:
        raise ValueError("no images given")
    for img in images[1:]:
        if img.grid != images[0].grid:
            raise ValueError("images live on different grids")
        if img.provenance.get("scene_digest") != images[0].provenance.get("scene_digest"):
            raise ValueError("images describe different scenes")
    total = images[0].values.copy()
    for img in images[1:]:
        total = total + img.values
    prov = dict(images[0].provenance)
    prov["waves"] = [w for img in images for w in img.provenance.get("waves", [])]
    prov["noise"] = [n for img in images for n in img.provenance.get("noise", [])]
    prov["dataset_digests"] = [d for img in images for d in img.provenance.get("dataset_digests", [])]
    return ImageGrid(images[0].grid, total, prov)


def cross_section(img, axis, offset):
    """Profile along the x1 axis (``axis="x1"``, at x2 = offset) or along x2.

    Returns (coordinates, values) from the nearest grid row or column.
    """
    g = img.grid
    if axis in ("x1", 0):
        if not g.a2 <= offset <= g.b2:
            raise ValueError("offset outside the grid")
        row = int(np.argmin(np.abs(g.x2 - offset)))
        return g.x1, img.values[row, :].copy()
    if axis in ("x2", 1):
        if not g.a1 <= offset <= g.b1:
            raise ValueError("offset outside the grid")
        col = int(np.argmin(np.abs(g.x1 - offset)))
        return g.x2, img.values[:, col].copy()
    raise ValueError(f"unknown axis {axis!r}")


def write_image(img, stem):
    stem = str(stem)
    atomic_write_bytes(stem + ".bin", np.ascontiguousarray(img.values).astype("<f8").tobytes())
    meta = {
        "format_version": IMAGE_FORMAT_VERSION,
        "layout": "row-major [iy, ix], float64 little-endian; vertex-centred grid",
        "grid": img.grid.to_dict(),
        "provenance": img.provenance,
    }
    atomic_write_text(stem + ".json", json.dumps(meta, indent=2, sort_keys=True))
    return stem + ".bin", stem + ".json"


def read_image(stem):
    stem = str(stem)
    if stem.endswith(".bin") or stem.endswith(".json"):
        stem = stem.rsplit(".", 1)[0]
    with open(stem + ".json") as fh:
        meta = json.load(fh)
    if meta.get("format_version") != IMAGE_FORMAT_VERSION:
        raise ValueError("unsupported image format version")
    grid = SamplingGrid(**meta["grid"])
    vals = np.fromfile(stem + ".bin", dtype="<f8").reshape(grid.shape)
    return ImageGrid(grid, vals, meta["provenance"])


def write_profile_csv(path, coords, values, axis_name="x1"):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([axis_name, "I"])
    for c, v in zip(coords, values):
        w.writerow([repr(float(c)), repr(float(v))])
    atomic_write_text(path, buf.getvalue())
