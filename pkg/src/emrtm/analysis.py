"""Quantitative image diagnostics: positivity and radial ridge localization.

The ridge on a ray is the highest interior local maximum of the image
sampled along that ray (the ray origin itself does not count, since it is
an end point). Its offset is the Euclidean distance from the ridge point to
the true boundary curve.
"""
import numpy as np
from scipy.ndimage import map_coordinates

__all__ = ["negative_fraction", "ray_profile", "ridge_points", "ridge_offsets"]


def negative_fraction(img, threshold=0.05):
    """Fraction of grid nodes with I < -threshold * max I."""
    v = img.values
    top = v.max()
    if top <= 0:
        return 1.0 if np.any(v < 0) else 0.0
    return float(np.mean(v < -threshold * top))


def _exit_length(grid, origin, direction):
    """Distance from ``origin`` along ``direction`` to the edge of the grid."""
    lengths = []
    for lo, hi, o, d in ((grid.a1, grid.b1, origin[0], direction[0]), (grid.a2, grid.b2, origin[1], direction[1])):
        if d > 0:
            lengths.append((hi - o) / d)
        elif d < 0:
            lengths.append((lo - o) / d)
    return min(lengths)


def ray_profile(img, origin, angle, step=None, order=3):
    """Image values along a ray, by spline interpolation of the grid.

    Returns (r, values) with r from 0 to the grid edge.
    """
    g = img.grid
    hx = (g.b1 - g.a1) / (g.nx - 1)
    hy = (g.b2 - g.a2) / (g.ny - 1)
    step = 0.25 * min(hx, hy) if step is None else step
    d = np.array([np.cos(angle), np.sin(angle)])
    origin = np.asarray(origin, dtype=float)
    length = _exit_length(g, origin, d)
    r = np.arange(0.0, length + 1e-12, step)
    pts = origin + r[:, None] * d
    coords = [(pts[:, 1] - g.a2) / hy, (pts[:, 0] - g.a1) / hx]
    vals = map_coordinates(img.values, coords, order=order, mode="nearest")
    return r, vals


def ridge_points(img, origin=(0.0, 0.0), n_rays=64, order=3):
    """Ridge point on each of ``n_rays`` equally spaced rays from ``origin``.

    Rays without any interior local maximum yield NaN.
    """
    origin = np.asarray(origin, dtype=float)
    out = np.full((n_rays, 2), np.nan)
    for i in range(n_rays):
        ang = 2 * np.pi * i / n_rays
        r, f = ray_profile(img, origin, ang, order=order)
        loc = np.flatnonzero((f[1:-1] > f[:-2]) & (f[1:-1] >= f[2:])) + 1
        if len(loc):
            best = r[loc[np.argmax(f[loc])]]
            out[i] = origin + best * np.array([np.cos(ang), np.sin(ang)])
    return out


def ridge_offsets(img, boundary, n_rays=64, origin=None, samples=4096, order=3):
    """Distance from each ray's ridge point to the boundary curve.

    ``origin`` defaults to the boundary's centre. Missing ridges give +inf.
    """
    origin = np.asarray(boundary.center if origin is None else origin, dtype=float)
    pts = ridge_points(img, origin, n_rays, order)
    th = 2 * np.pi * np.arange(samples) / samples
    curve, _, _ = boundary.derivatives(th)
    d = np.hypot(pts[:, None, 0] - curve[None, :, 0], pts[:, None, 1] - curve[None, :, 1])
    off = np.min(d, axis=1)
    return np.where(np.isnan(off), np.inf, off)
