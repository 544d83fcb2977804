"""Nystrom solver for TE scattering by smooth PEC / impedance cylinders.

Direct second-kind formulation for the total-field trace u = H3 on the
boundary. With outward normal nu and Phi = g2, Green's representation gives

    u/2 - D u - S[(ik/eta) u] = H3_inc          on Gamma

where D and S are the double- and single-layer operators (the S term is
absent for PEC, which is Neumann for H3). Logarithmic singularities of the
self-interaction kernels are integrated with Kress' product quadrature,
giving spectral convergence for analytic boundaries. Several bodies are
coupled through a dense block system, so multiple scattering is included.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import special as _sp

from ..green import e_from_h3_grad, grad_g2, hess_g2

__all__ = ["NystromSystem", "ResonanceError", "nystrom_solve", "node_count"]

EULER_GAMMA = 0.57721566490153286061
COND_LIMIT = 1e8
MIN_NODES = 32


class ResonanceError(ArithmeticError):
    """Boundary integral system too ill-conditioned (likely interior resonance)."""


def node_count(boundary, wave, points_per_wavelength):
    """Even node count giving the requested density along the arc."""
    th = 2 * np.pi * np.arange(2048) / 2048
    _, dx, _ = boundary.derivatives(th)
    length = np.mean(np.hypot(dx[:, 0], dx[:, 1])) * 2 * np.pi
    n = int(np.ceil(points_per_wavelength * length / wave.wavelength))
    n += n % 2
    return max(n, MIN_NODES)


def kress_weights(n_nodes):
    """R_j for the product rule int_0^{2pi} ln(4 sin^2((t-tau)/2)) f(tau) dtau.

    Returned as a vector over index offsets j = 0 .. 2n-1 (circulant).
    """
    n = n_nodes // 2
    j = np.arange(n_nodes)
    m = np.arange(1, n)
    ang = np.outer(j, m) * np.pi / n
    r = -(2 * np.pi / n) * (np.cos(ang) @ (1.0 / m)) - (np.pi / n**2) * np.cos(j * np.pi)
    return r


@dataclass
class _Body:
    theta: np.ndarray
    x: np.ndarray
    dx: np.ndarray
    ddx: np.ndarray
    jac: np.ndarray
    normal: np.ndarray
    beta: np.ndarray  # ik/eta per node, zeros for PEC

    @property
    def n(self):
        return len(self.theta)


def _make_body(component, wave, n):
    theta = 2 * np.pi * np.arange(n) / n
    x, dx, ddx = component.boundary.derivatives(theta)
    jac = np.hypot(dx[:, 0], dx[:, 1])
    normal = np.stack([dx[:, 1], -dx[:, 0]], -1) / jac[:, None]
    bc = component.bc
    if bc.kind == "pec":
        beta = np.zeros(n, dtype=complex)
    elif bc.kind == "impedance":
        beta = 1j * wave.k / bc.eta_at(theta)
    else:
        raise ValueError("the Nystrom solver handles PEC and impedance boundaries only")
    return _Body(theta, x, dx, ddx, jac, normal, beta.astype(complex))


def _self_block(body, k, rweights):
    n = body.n
    half = n // 2
    x, dx, ddx, jac = body.x, body.dx, body.ddx, body.jac
    d = x[:, None, :] - x[None, :, :]  # x(t_i) - x(tau_l)
    r = np.hypot(d[..., 0], d[..., 1])
    off = ~np.eye(n, dtype=bool)
    rs = np.where(off, r, 1.0)
    kr = k * rs
    j0, j1 = _sp.j0(kr), _sp.j1(kr)
    h0 = j0 + 1j * _sp.y0(kr)
    h1 = j1 + 1j * _sp.y1(kr)
    nvec = np.stack([dx[:, 1], -dx[:, 0]], -1)  # unnormalised normal, |n| = jac
    dn = np.einsum("ilk,lk->il", d, nvec)  # (x(t) - x(tau)) . n(tau)

    logw = np.log(4.0 * np.sin((body.theta[:, None] - body.theta[None, :]) / 2.0) ** 2 + ~off)

    # double layer
    L = 0.5j * k * h1 / rs * dn
    L1 = -(k / (2 * np.pi)) * dn * j1 / rs
    L2 = L - L1 * logw
    diag_l = (dx[:, 1] * ddx[:, 0] - dx[:, 0] * ddx[:, 1]) / (2 * np.pi * jac**2)
    L1[~off] = 0.0
    L2[~off] = diag_l

    K1, K2 = L1, L2
    if np.any(body.beta != 0):
        M = 0.5j * h0 * jac[None, :]
        M1 = -(1.0 / (2 * np.pi)) * j0 * jac[None, :]
        M2 = M - M1 * logw
        M1[~off] = -jac / (2 * np.pi)
        M2[~off] = (0.5j - EULER_GAMMA / np.pi - np.log(0.5 * k * jac) / np.pi) * jac
        K1 = K1 + M1 * body.beta[None, :]
        K2 = K2 + M2 * body.beta[None, :]

    idx = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    R = rweights[idx]
    return R * K1 + (np.pi / half) * K2


def _layer_rows(targets, body, k):
    """Trapezoid kernel rows 2(dPhi/dnu + beta Phi)|x'| from ``body`` to ``targets``."""
    d = targets[:, None, :] - body.x[None, :, :]
    r = np.hypot(d[..., 0], d[..., 1])
    kr = k * r
    h0 = _sp.j0(kr) + 1j * _sp.y0(kr)
    h1 = _sp.j1(kr) + 1j * _sp.y1(kr)
    dn = np.einsum("ilk,lk->il", d, body.normal) * body.jac[None, :]
    kern = 0.5j * k * h1 / r * dn + body.beta[None, :] * 0.5j * h0 * body.jac[None, :]
    return kern * (2 * np.pi / body.n)


@dataclass
class NystromSystem:
    """Assembled and factorised boundary system for one scene and wave."""

    bodies: list
    wave: object
    matrix: np.ndarray
    condition: float
    offsets: np.ndarray
    lu: tuple = field(repr=False, default=None)
    density: np.ndarray = None
    rhs: np.ndarray = None
    residual: float = None

    @property
    def nodes(self):
        return np.concatenate([b.x for b in self.bodies])

    @property
    def normals(self):
        return np.concatenate([b.normal for b in self.bodies])

    @property
    def jacobians(self):
        return np.concatenate([b.jac for b in self.bodies])

    def solve(self, incident_trace):
        """Solve for the total-field trace given H3_inc at the nodes.

        ``incident_trace`` has shape (N,) or (N, nrhs).
        """
        rhs = 2.0 * np.asarray(incident_trace, dtype=complex)
        u = sla.lu_solve(self.lu, rhs)
        res = np.linalg.norm(self.matrix @ u - rhs) / max(np.linalg.norm(rhs), 1e-300)
        self.density, self.rhs, self.residual = u, rhs, float(res)
        return u

    def scattered(self, points, density=None):
        """Scattered H3 and its gradient at exterior points.

        Returns (H3 of shape (P, nrhs...), grad of shape (P, 2, nrhs...)).
        """
        u = self.density if density is None else density
        points = np.asarray(points, dtype=float)
        k = self.wave.k
        val = 0.0
        grad = 0.0
        for b, lo in zip(self.bodies, self.offsets[:-1]):
            ub = u[lo:lo + b.n]
            w = (2 * np.pi / b.n) * b.jac
            rows = _layer_rows(points, b, k) * 0.5  # (P, n): dPhi/dnu + beta Phi
            val = val + rows @ ub
            # grad_x dPhi/dnu(y) = -Hess Phi(x, y) nu(y); grad_x Phi = grad_g2
            hs = hess_g2(points[:, None, :], b.x[None, :, :], self.wave)
            gs = grad_g2(points[:, None, :], b.x[None, :, :], self.wave)
            gk = -np.einsum("plij,lj->pli", hs, b.normal) + b.beta[None, :, None] * gs
            gk = gk * w[None, :, None]
            grad = grad + np.einsum("pli,l...->pi...", gk, ub)
        return val, grad

    def scattered_e(self, points, density=None):
        """Scattered in-plane E at points, shape (P, 2, nrhs...) -> (P, nrhs..., 2)."""
        _, grad = self.scattered(points, density)
        grad = np.moveaxis(grad, 1, -1)
        return e_from_h3_grad(grad, self.wave)


def nystrom_solve(scene, wave, incident=None, points_per_wavelength=10, check_condition=True):
    """Assemble (and optionally solve) the coupled boundary system for a scene.

    ``incident`` is a callable mapping node coordinates (N, 2) to H3_inc
    values of shape (N,) or (N, nrhs). The normal derivative of the incident
    field is not needed by this formulation.
    """
    k = wave.k
    bodies = []
    for comp in scene.components:
        n = node_count(comp.boundary, wave, points_per_wavelength)
        bodies.append(_make_body(comp, wave, n))
    sizes = [b.n for b in bodies]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    ntot = offsets[-1]
    A = np.eye(ntot, dtype=complex)
    for a, ba in enumerate(bodies):
        ra = slice(offsets[a], offsets[a + 1])
        for c, bc_ in enumerate(bodies):
            rc = slice(offsets[c], offsets[c + 1])
            if a == c:
                A[ra, rc] -= _self_block(ba, k, kress_weights(ba.n))
            else:
                A[ra, rc] -= _layer_rows(ba.x, bc_, k)
    lu = sla.lu_factor(A, check_finite=True)
    anorm = np.linalg.norm(A, 1)
    rcond, info = sla.lapack.zgecon(lu[0], anorm, norm="1")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if check_condition and cond > COND_LIMIT:
        raise ResonanceError(
            f"boundary system condition estimate {cond:.2e} exceeds {COND_LIMIT:.0e}; "
            "k is likely near an interior resonance, perturb the wave number slightly"
        )
    system = NystromSystem(bodies, wave, A, float(cond), offsets, lu)
    if incident is not None:
        system.solve(incident(system.nodes))
    return system
