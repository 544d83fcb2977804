"""Separation-of-variables (modal) scattering by a circular cylinder, TE case.

Fields are expanded about the circle centre as

    H3_inc = sum_m a_m J_m(kr) e^{im theta}
    H3_sca = sum_m b_m H_m(kr) e^{im theta}
    H3_int = sum_m c_m J_m(k sqrt(n0) r) e^{im theta}     (penetrable only)

with m running over -M..M; coefficient arrays are indexed by m + M.
"""
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from ..geometry import BoundaryCondition
from ..green import WaveConfig, e_from_h3_grad

__all__ = [
    "ModalSolution",
    "AliasingError",
    "SingularConfigurationError",
    "default_m_max",
    "mie_project_incident",
    "mie_solve",
    "mie_eval_scattered",
    "mie_eval_incident",
    "far_field",
    "far_field_power",
]

DECAY_TOL = 1e-12
DENOM_TOL = 1e-13


class AliasingError(ValueError):
    """Modal expansion not resolved by the chosen truncation order."""


class SingularConfigurationError(ArithmeticError):
    """Modal system (numerically) singular for this k and radius."""


def default_m_max(k, radius):
    kr = k * radius
    return int(np.ceil(kr + 6.0 * kr ** (1.0 / 3.0) + 12.0))


def _orders(m_max):
    return np.arange(-m_max, m_max + 1)


def _jh(m_abs, x):
    """J, J', H, H' at integer orders |m| (vectorised over m)."""
    j = _sp.jv(m_abs, x)
    y = _sp.yv(m_abs, x)
    jm1 = _sp.jv(m_abs - 1, x)
    ym1 = _sp.yv(m_abs - 1, x)
    h = j + 1j * y
    dj = jm1 - (m_abs / x) * j
    dh = (jm1 + 1j * ym1) - (m_abs / x) * h
    return j, dj, h, dh


@dataclass
class ModalSolution:
    center: np.ndarray
    radius: float
    m_max: int
    a: np.ndarray
    b: np.ndarray
    wave: WaveConfig
    bc: BoundaryCondition
    c: np.ndarray = None

    @property
    def orders(self):
        return _orders(self.m_max)


def mie_project_incident(h3, dh3_dr, radius, wave, m_max, check_decay=True):
    """Modal coefficients a_m of an incident field sampled on the circle r = radius.

    ``h3`` and ``dh3_dr`` hold the field and its radial derivative at
    theta_j = 2 pi j / n along the last axis (n >= 4 M). Two independent
    Fourier projections give a_m J_m(k rho) and a_m k J_m'(k rho); a_m is their
    least-squares combination, well defined because J_m and J_m' never vanish
    together.

    Returns (a, mismatch) where ``mismatch`` is the largest disagreement
    between the two projections, |a_m k J_m' - d_m|, over all m.
    """
    h3 = np.asarray(h3, dtype=complex)
    dh3_dr = np.asarray(dh3_dr, dtype=complex)
    n = h3.shape[-1]
    if n < 4 * m_max:
        raise ValueError(f"need at least 4*M_max = {4 * m_max} samples, got {n}")
    m = _orders(m_max)
    fh = np.fft.fft(h3, axis=-1) / n
    fd = np.fft.fft(dh3_dr, axis=-1) / n
    idx = np.mod(m, n)
    cm = fh[..., idx]
    dm = fd[..., idx]
    if check_decay:
        _check_decay(cm, dm / wave.k)
    x = wave.k * radius
    j, dj, _, _ = _jh(np.abs(m), x)
    sign = np.where((m < 0) & (np.abs(m) % 2 == 1), -1.0, 1.0)
    j = j * sign
    dj = dj * sign
    a = (cm * j + (dm / wave.k) * dj) / (j * j + dj * dj)
    mismatch = np.max(np.abs(a * wave.k * dj - dm), initial=0.0)
    return a, float(mismatch)


def _check_decay(*coeffs):
    for c in coeffs:
        c = np.abs(np.asarray(c))
        scale = c.max(initial=0.0)
        if scale == 0.0:
            continue
        edge = np.maximum(c[..., 0], c[..., -1]).max()
        if edge > DECAY_TOL * scale:
            raise AliasingError(
                f"modal coefficients at |m| = M_max are {edge / scale:.1e} of the peak; increase M_max"
            )


def mie_solve(a, bc, radius, wave, center=(0.0, 0.0)):
    """Scattered (and transmitted) modal coefficients for one circle.

    ``a`` may carry leading batch axes; the last axis is the mode index.
    """
    a = np.asarray(a, dtype=complex)
    m_max = (a.shape[-1] - 1) // 2
    m_abs = np.abs(_orders(m_max))
    k = wave.k
    x = k * radius
    j, dj, h, dh = _jh(m_abs, x)
    c = None
    if bc.kind == "pec":
        num, den = dj, dh
        size = np.abs(dh)
    elif bc.kind == "impedance":
        if not bc.eta_constant:
            raise ValueError("modal solver needs a constant impedance")
        beta = 1j * k / bc.eta
        num = k * dj + beta * j
        den = k * dh + beta * h
        size = np.abs(k * dh) + np.abs(beta * h)
    elif bc.kind == "penetrable":
        n0 = bc.n0
        k1 = k * np.sqrt(n0)
        j1, dj1, _, _ = _jh(m_abs, k1 * radius)
        t1, t2 = k * j1 * dh, (k1 / n0) * h * dj1
        den = t1 - t2
        _check_den(den, np.abs(t1) + np.abs(t2))
        b = a * ((k1 / n0) * j * dj1 - k * j1 * dj) / den
        c = a * (2j / (np.pi * radius)) / den
        return ModalSolution(np.asarray(center, float), radius, m_max, a, b, wave, bc, c)
    else:
        raise ValueError(f"unsupported boundary condition {bc.kind!r}")
    _check_den(den, size)
    b = -a * num / den
    return ModalSolution(np.asarray(center, float), radius, m_max, a, b, wave, bc)


def _check_den(den, size):
    # relative to the terms that were subtracted, so that the natural
    # decay of high-order denominators is not mistaken for a resonance
    if np.any(np.abs(den) < DENOM_TOL * size):
        raise SingularConfigurationError("modal denominator vanishes; perturb k or the radius")


def _modal_sum(coef, kind, sol, x):
    """Field and gradient of sum_m coef_m Z_m(k r) e^{im theta} at points x."""
    x = np.asarray(x, dtype=float)
    d = x - sol.center
    r = np.hypot(d[..., 0], d[..., 1])
    th = np.arctan2(d[..., 1], d[..., 0])
    m = sol.orders
    m_abs = np.abs(m)
    sign = np.where((m < 0) & (m_abs % 2 == 1), -1.0, 1.0)
    k = sol.wave.k
    kr = (k * r)[..., None]
    if kind == "h":
        z, dz = _jh(m_abs, kr)[2:]
    else:
        z, dz = _jh(m_abs, kr)[:2]
    e = np.exp(1j * m * th[..., None])
    cz = coef[..., None, :] if coef.ndim > 1 else coef
    # shape (..., points, modes) after broadcasting; batch axes of coef lead
    zs = z * sign * e
    dzs = dz * sign * e
    u = np.sum(cz * zs, axis=-1)
    du_dr = k * np.sum(cz * dzs, axis=-1)
    du_dth_r = np.sum(cz * (1j * m) * zs, axis=-1) / r
    c, s = np.cos(th), np.sin(th)
    grad = np.stack([c * du_dr - s * du_dth_r, s * du_dr + c * du_dth_r], -1)
    return u, grad, du_dr


def mie_eval_scattered(sol, x):
    """Scattered H3 and in-plane E at exterior points.

    Returns (H3, E) with E = (i/k)(d2 H3, -d1 H3) from the analytic modal
    gradient.
    """
    x = np.asarray(x, dtype=float)
    d = x - sol.center
    if np.any(np.hypot(d[..., 0], d[..., 1]) <= sol.radius):
        raise ValueError("scattered field requested inside the scatterer")
    u, grad, _ = _modal_sum(sol.b, "h", sol, x)
    return u, e_from_h3_grad(grad, sol.wave)


def mie_eval_incident(sol, x):
    """Incident H3 and its gradient from the regular modal expansion."""
    u, grad, _ = _modal_sum(sol.a, "j", sol, x)
    return u, grad


def far_field(sol, theta):
    """Far-field pattern u_inf with H3_sca ~ e^{ikr} r^{-1/2} u_inf(theta)."""
    m = sol.orders
    k = sol.wave.k
    phase = np.exp(1j * np.multiply.outer(np.asarray(theta, float), m))
    return np.sqrt(2.0 / (np.pi * k)) * np.exp(-0.25j * np.pi) * (phase @ (sol.b * (-1j) ** m))


def far_field_power(sol):
    """k times the integral of |u_inf|^2 over the unit circle, i.e. 4 sum |b_m|^2."""
    return 4.0 * float(np.sum(np.abs(sol.b) ** 2))
