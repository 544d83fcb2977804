"""Two-dimensional Helmholtz and dyadic Green functions.

Conventions: time factor exp(-i omega t), so outgoing waves behave like
exp(ikr) and the scalar fundamental solution is g(x, y) = (i/4) H_0^(1)(k|x-y|),
with (Delta + k^2) g = -delta_y.

TE fields are carried by the out-of-plane magnetic component H3. The in-plane
electric field is recovered as E = (i/k) (d2 H3, -d1 H3).

Every function broadcasts over leading axes: points have shape (..., 2).
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

__all__ = [
    "WaveConfig",
    "CoincidenceError",
    "g2",
    "grad_g2",
    "hess_g2",
    "dyadic_g2",
    "im_dyadic_g2",
    "dipole_h3",
    "dipole_h3_grad",
    "regular_dipole_h3",
    "regular_dipole_h3_grad",
    "e_from_h3_grad",
]

# below this k*r the regular (J-type) kernels use their Taylor series
_SERIES_SWITCH = 1e-3
_SERIES_TERMS = 6


class CoincidenceError(ValueError):
    """Singular kernel evaluated at coincident points."""


@dataclass(frozen=True)
class WaveConfig:
    """Wave number ``k`` (rad per unit length) and its wavelength."""

    k: float

    def __post_init__(self):
        if not (np.isfinite(self.k) and self.k > 0):
            raise ValueError(f"wave number must be positive, got {self.k!r}")

    @classmethod
    def from_wavelength(cls, wavelength):
        return cls(2.0 * np.pi / float(wavelength))

    @property
    def wavelength(self):
        return 2.0 * np.pi / self.k

    def to_dict(self):
        return {"k": self.k, "wavelength": self.wavelength}


def _separation(x, y):
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.hypot(d[..., 0], d[..., 1])
    return d, r


def _singular_parts(x, y, k):
    d, r = _separation(x, y)
    if np.any(r == 0.0):
        raise CoincidenceError("singular Green kernel evaluated at x == y")
    t = k * r
    # J + iY rather than scipy's hankel1, whose real part loses accuracy for small t
    h0 = _sp.j0(t) + 1j * _sp.y0(t)
    h1 = _sp.j1(t) + 1j * _sp.y1(t)
    return d, r, t, h0, h1


def g2(x, y, wave):
    """Scalar fundamental solution (i/4) H_0^(1)(k|x - y|)."""
    d, r = _separation(x, y)
    if np.any(r == 0.0):
        raise CoincidenceError("g2 evaluated at x == y")
    t = wave.k * r
    return 0.25j * (_sp.j0(t) + 1j * _sp.y0(t))


def grad_g2(x, y, wave):
    """Gradient of g2 with respect to x: -(ik/4) H_1^(1)(kr) (x - y)/r."""
    d, r, t, h0, h1 = _singular_parts(x, y, wave.k)
    return (-0.25j * wave.k * h1 / r)[..., None] * d


def _dyadic_coeffs(t, z0, z1):
    """Scalar coefficients (a, b) with (I + Hess/k^2) Z0 = a I + b rr^T."""
    z1t = z1 / t
    return z0 - z1t, 2.0 * z1t - z0


def hess_g2(x, y, wave):
    """Hessian of g2 in x, shape (..., 2, 2)."""
    k = wave.k
    d, r, t, h0, h1 = _singular_parts(x, y, k)
    rh = d / r[..., None]
    h1t = h1 / t
    a = -h1t
    b = 2.0 * h1t - h0
    eye = np.eye(2)
    out = a[..., None, None] * eye + b[..., None, None] * (rh[..., :, None] * rh[..., None, :])
    return 0.25j * k * k * out


def dyadic_g2(x, y, wave):
    """Dyadic Green function g I + Hess(g)/k^2, shape (..., 2, 2).

    The off-diagonal entries are computed once and mirrored, so the result
    is exactly symmetric.
    """
    d, r, t, h0, h1 = _singular_parts(x, y, wave.k)
    a, b = _dyadic_coeffs(t, h0, h1)
    rx = d[..., 0] / r
    ry = d[..., 1] / r
    out = np.empty(d.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = 0.25j * (a + b * rx * rx)
    out[..., 1, 1] = 0.25j * (a + b * ry * ry)
    off = 0.25j * b * rx * ry
    out[..., 0, 1] = off
    out[..., 1, 0] = off
    return out


def _regular_parts(x, z, k):
    """Return separation d and coefficients (a, b2) with

    (I + Hess/k^2) J0(k|x-z|) = a I + b2 k^2 d d^T
    grad J0(k|x-z|) = -k^2 (J1(t)/t) d
    valid at and near coincidence.
    """
    d, r = _separation(x, z)
    t = k * r
    small = t < _SERIES_SWITCH
    tt = np.where(small, 1.0, t)
    j0 = _sp.j0(tt)
    j1t = _sp.j1(tt) / tt
    a = j0 - j1t
    b2 = (2.0 * j1t - j0) / (tt * tt)
    if np.any(small):
        s_j0, s_j1t, s_b2 = _regular_series(t * t)
        a = np.where(small, s_j0 - s_j1t, a)
        b2 = np.where(small, s_b2, b2)
        j1t = np.where(small, s_j1t, j1t)
    return d, a, b2, j1t


def _regular_series(t2):
    j0 = np.zeros_like(t2)
    j1t = np.zeros_like(t2)
    b2 = np.zeros_like(t2)
    q = t2 / 4.0
    for n in range(_SERIES_TERMS):
        term = (-q) ** n / _FACT2[n]
        j0 = j0 + term
        j1t = j1t + 0.5 * term / (n + 1)
        # (2 J1/t - J0)/t^2 = sum_{n>=1} -n/(n+1) (-1)^n q^(n-1) / (4 (n!)^2)
        m = n + 1
        b2 = b2 + (-m / (m + 1.0)) * ((-1.0) ** m) * q ** n / (4.0 * _FACT2[m])
    return j0, j1t, b2


_FACT2 = np.array([float(math.factorial(n)) ** 2 for n in range(_SERIES_TERMS + 2)])


def im_dyadic_g2(x, z, wave):
    """Imaginary part of the dyadic Green function, (1/4)(I + Hess/k^2) J0.

    Smooth everywhere; equals I/8 at x == z.
    """
    k = wave.k
    d, a, b2, _ = _regular_parts(x, z, k)
    kd = k * d
    out = np.empty(d.shape[:-1] + (2, 2))
    out[..., 0, 0] = 0.25 * (a + b2 * kd[..., 0] * kd[..., 0])
    out[..., 1, 1] = 0.25 * (a + b2 * kd[..., 1] * kd[..., 1])
    off = 0.25 * b2 * kd[..., 0] * kd[..., 1]
    out[..., 0, 1] = off
    out[..., 1, 0] = off
    return out


def _rot(p):
    """(p2, -p1): H3 = (1/(ik)) grad(Z) . (p2, -p1)."""
    p = np.asarray(p, dtype=float)
    return np.stack([p[..., 1], -p[..., 0]], axis=-1)


def dipole_h3(x, x_s, p, wave):
    """Out-of-plane magnetic field of an in-plane electric dipole at x_s.

    H3 = (1/(ik)) (p2 dg/dx1 - p1 dg/dx2); its electric field
    (i/k)(d2 H3, -d1 H3) equals the dyadic field G(x, x_s) p.
    """
    q = _rot(p)
    grad = grad_g2(x, x_s, wave)
    return np.sum(grad * q, axis=-1) / (1j * wave.k)


def dipole_h3_grad(x, x_s, p, wave):
    """Gradient of dipole_h3 with respect to x, shape (..., 2)."""
    q = _rot(p)
    hess = hess_g2(x, x_s, wave)
    return np.einsum("...ij,...j->...i", hess, q) / (1j * wave.k)


def regular_dipole_h3(x, z, p, wave):
    """H3 whose electric field is Im G(x, z) p (entire solution of Helmholtz)."""
    k = wave.k
    q = _rot(p)
    d, a, b2, j1t = _regular_parts(x, z, k)
    grad = (-0.25 * k * k * j1t)[..., None] * d
    return np.sum(grad * q, axis=-1) / (1j * k)


def regular_dipole_h3_grad(x, z, p, wave):
    """Gradient of regular_dipole_h3 with respect to x."""
    k = wave.k
    q = _rot(p)
    d, a, b2, j1t = _regular_parts(x, z, k)
    # Hess(J0/4) = (k^2/4) [-(J1/t) I + b2 k^2 d d^T]
    kd = k * d
    hq = -j1t[..., None] * q + (b2 * np.sum(kd * q, axis=-1))[..., None] * kd
    return 0.25 * k * k * hq / (1j * k)


def e_from_h3_grad(grad_h3, wave):
    """In-plane electric field (i/k)(d2 H3, -d1 H3) from grad H3."""
    grad_h3 = np.asarray(grad_h3)
    return (1j / wave.k) * np.stack([grad_h3[..., 1], -grad_h3[..., 0]], axis=-1)
