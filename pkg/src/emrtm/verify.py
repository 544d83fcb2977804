"""Numerical checks of the identities behind the imaging functional.

Every check returns an :class:`IdentityReport`; reports serialise to one
JSON object per line. Ring integrals use the periodic trapezoid rule.
"""
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .forward.data import generate_dataset
from .forward.mie import _modal_sum, default_m_max, far_field_power, mie_project_incident, mie_solve
from .green import dyadic_g2, g2, grad_g2, im_dyadic_g2, regular_dipole_h3, regular_dipole_h3_grad
from .rtm import image_points

__all__ = [
    "IdentityReport",
    "hk_exact",
    "hk_farfield",
    "decay_exponent",
    "energy_flux",
    "scattered_energy",
    "theorem31_consistency",
    "reciprocity_check",
    "run_checks",
    "write_reports",
]


@dataclass
class IdentityReport:
    name: str
    parameters: dict
    residual: float
    expected_order: str
    passed: bool
    runtime: float
    tolerance: float = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.residual >= 0:
            raise ValueError("residual must be a non-negative number")

    def to_json(self):
        return json.dumps(_plain(asdict(self)), sort_keys=True)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def _ring(radius, n):
    th = 2 * np.pi * np.arange(n) / n
    nu = np.stack([np.cos(th), np.sin(th)], -1)
    return radius * nu, nu, 2 * np.pi * radius / n


def hk_exact(x, z, radius, wave, n=512, tol=1e-10):
    """Exact Helmholtz-Kirchhoff identity on the circle |xi| = radius.

    Residual of  oint conj(g(x,xi)) d_nu g(xi,z) - d_nu conj(g(x,xi)) g(xi,z) ds = 2i Im g(x,z).
    """
    t0 = time.perf_counter()
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.hypot(*x) >= radius or np.hypot(*z) >= radius:
        raise ValueError("x and z must lie inside the integration circle")
    xi, nu, w = _ring(radius, n)
    gx = g2(xi, x, wave)
    gz = g2(xi, z, wave)
    dgx = np.sum(grad_g2(xi, x, wave) * nu, -1)
    dgz = np.sum(grad_g2(xi, z, wave) * nu, -1)
    lhs = w * np.sum(np.conj(gx) * dgz - np.conj(dgx) * gz)
    if np.allclose(x, z):
        img = 0.25
    else:
        img = g2(x, z, wave).imag
    res = float(abs(lhs - 2j * img))
    return IdentityReport(
        "hk_exact",
        {"k": wave.k, "R": float(radius), "N": int(n), "x": x.tolist(), "z": z.tolist()},
        res,
        "exact (quadrature error only)",
        res <= tol,
        time.perf_counter() - t0,
        tol,
    )


def _farfield_residuals(x, z, radius, wave, n):
    xi, _, w = _ring(radius, n)
    k = wave.k
    Gx = dyadic_g2(x, xi, wave)
    Gz = dyadic_g2(xi, z, wave)
    dy = k * w * np.einsum("nji,njl->il", np.conj(Gx), Gz) - im_dyadic_g2(x, z, wave)
    sc = k * w * np.sum(np.conj(g2(z, xi, wave)) * g2(x, xi, wave))
    img = 0.25 if np.allclose(x, z) else g2(x, z, wave).imag
    return float(np.linalg.norm(dy)), float(abs(sc - img))


def _farfield_nodes(x, z, wave):
    # the correlated integrand varies like exp(ik xi.(x - z)) on the ring
    band = wave.k * (np.hypot(*x) + np.hypot(*z))
    return int(max(128, 4 * np.ceil(band) + 64))


def decay_exponent(radii, residuals):
    """Least-squares slope p of log(residual) = c - p log(R)."""
    r = np.log(np.asarray(radii, dtype=float))
    v = np.log(np.maximum(np.asarray(residuals, dtype=float), 1e-300))
    return float(-np.polyfit(r, v, 1)[0])


def hk_farfield(x, z, radius, wave, n=None, tol=2e-3, min_exponent=0.8):
    """Aperture version of the identity with the outgoing-wave approximation.

    Residuals of k oint conj(G(x,xi))^T G(xi,z) ds ~ Im G(x,z) (Frobenius
    norm) and of the scalar analogue, at ``radius`` and at twice the radius.
    The decay exponent is fitted from the two runs. The check passes when
    both residuals are within ``tol`` and both decay at least like R^-min_exponent.
    """
    t0 = time.perf_counter()
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    n = _farfield_nodes(x, z, wave) if n is None else int(n)
    radii = [float(radius), 2.0 * radius]
    runs = [_farfield_residuals(x, z, r, wave, n) for r in radii]
    dy = [a for a, _ in runs]
    sc = [b for _, b in runs]
    p_dy = decay_exponent(radii, dy)
    p_sc = decay_exponent(radii, sc)
    res = max(dy[0], sc[0])
    ok = res <= tol and min(p_dy, p_sc) >= min_exponent
    return IdentityReport(
        "hk_farfield",
        {"k": wave.k, "R": float(radius), "N": n, "x": x.tolist(), "z": z.tolist()},
        res,
        "O(1/R) bound",
        bool(ok),
        time.perf_counter() - t0,
        tol,
        {
            "radii": radii,
            "residual_dyadic": dy,
            "residual_scalar": sc,
            "exponent_dyadic": p_dy,
            "exponent_scalar": p_sc,
        },
    )


def _flux(coef, kind, sol, radius, n):
    """Im oint conj(u) du/dr ds over the circle |x - centre| = radius."""
    th = 2 * np.pi * np.arange(n) / n
    pts = sol.center + radius * np.stack([np.cos(th), np.sin(th)], -1)
    u, _, du = _modal_sum(coef, kind, sol, pts)
    return float(np.imag(np.sum(np.conj(u) * du)) * 2 * np.pi * radius / n), u


def _total_flux(sol, radius, n):
    th = 2 * np.pi * np.arange(n) / n
    pts = sol.center + radius * np.stack([np.cos(th), np.sin(th)], -1)
    us, _, dus = _modal_sum(sol.b, "h", sol, pts)
    ui, _, dui = _modal_sum(sol.a, "j", sol, pts)
    u, du = us + ui, dus + dui
    return float(np.imag(np.sum(np.conj(u) * du)) * 2 * np.pi * radius / n), u


def energy_flux(sol, radius, tol=1e-8, floor=-1e-12):
    """Scattered energy flux through |x| = radius versus far-field power.

    For lossless boundaries (PEC, penetrable) the residual is the relative
    difference between Im oint conj(H^s) d_r H^s ds and k oint |u_inf|^2.
    Impedance boundaries absorb; the total-field flux through the ring must
    then be non-positive and equal to -(k/eta) oint_Gamma |H3|^2 ds, and the
    residual measures that balance.
    """
    t0 = time.perf_counter()
    if radius <= sol.radius:
        raise ValueError("flux circle must enclose the scatterer")
    n = int(max(64, 4 * sol.m_max + 16))
    flux, _ = _flux(sol.b, "h", sol, radius, n)
    power = far_field_power(sol)
    details = {"flux": flux, "far_field_power": power}
    scale = max(abs(flux), abs(power))
    res = 0.0 if scale == 0 else abs(flux - power) / scale
    ok = res <= tol and flux >= floor and power >= floor
    order = "exact (Wronskian)"
    if sol.bc.kind == "impedance":
        total, _ = _total_flux(sol, radius, n)
        _, u_gamma = _total_flux(sol, sol.radius, n)
        absorbed = (sol.wave.k / sol.bc.eta) * float(np.sum(np.abs(u_gamma) ** 2)) * 2 * np.pi * sol.radius / n
        details.update({"total_flux": total, "absorbed": absorbed})
        bal_scale = max(abs(total), absorbed)
        bal = 0.0 if bal_scale == 0 else abs(total + absorbed) / bal_scale
        res = max(res, bal)
        ok = ok and bal <= tol and total <= abs(floor) and absorbed >= 0
        order = "exact (Wronskian + boundary absorption)"
    return IdentityReport(
        "energy_flux",
        {"k": sol.wave.k, "R": float(radius), "N": n, "bc": sol.bc.kind},
        float(res),
        order,
        bool(ok),
        time.perf_counter() - t0,
        tol,
        details,
    )


def scattered_energy(circle, bc, z, polarizations, wave, samples=1024, margin=10):
    """T(z) = sum_p k oint |Psi_inf(.; z, p)|^2 for the field scattered from Im G(., z) p.

    Computed with the modal solver, independent of the imaging pipeline.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    c = np.asarray(circle.center, dtype=float)
    rho = circle.radius
    m_max = default_m_max(wave.k, rho) + margin
    samples = max(samples, int(2 ** np.ceil(np.log2(4 * m_max))))
    th = 2 * np.pi * np.arange(samples) / samples
    unit = np.stack([np.cos(th), np.sin(th)], -1)
    pts = c + rho * unit
    out = np.zeros(len(z))
    for p in np.asarray(polarizations, dtype=float).reshape(-1, 2):
        zz = z[:, None, :]
        h = regular_dipole_h3(pts[None], zz, p, wave)
        dr = np.sum(regular_dipole_h3_grad(pts[None], zz, p, wave) * unit, -1)
        a, _ = mie_project_incident(h, dr, rho, wave, m_max, check_decay=False)
        sol = mie_solve(a, bc, rho, wave, center=c)
        out += 4.0 * np.sum(np.abs(sol.b) ** 2, axis=-1)
    return out


def theorem31_consistency(scene, points, wave, aperture, polarizations=((1.0, 0.0),), data=None, min_corr=0.95):
    """Correlation between the image and the independently computed T(z).

    ``scene`` must be a single penetrable circle. ``data`` may be supplied to
    reuse an existing data set generated for the same scene and wave.
    """
    t0 = time.perf_counter()
    if len(scene) != 1:
        raise ValueError("theorem check needs a single scatterer")
    comp = scene.components[0]
    if comp.boundary.kind != "circle" or comp.bc.kind != "penetrable":
        raise ValueError("theorem check needs a penetrable circle")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if data is None:
        data = generate_dataset(scene, aperture, wave, polarizations, solver="mie")
    img = image_points(data, pts, polarizations)
    T = scattered_energy(comp.boundary, comp.bc, pts, polarizations, wave)
    if np.std(img) == 0 or np.std(T) == 0:
        corr = 1.0 if np.allclose(img, 0, atol=1e-12) and np.allclose(T, 0, atol=1e-12) else 0.0
        scale = 0.0
    else:
        corr = float(np.corrcoef(img, T)[0, 1])
        scale = float(np.dot(img, T) / np.dot(T, T))
    res = max(0.0, 1.0 - corr)
    ok = corr >= min_corr and scale > 0
    return IdentityReport(
        "theorem31_consistency",
        {"k": wave.k, "n_points": len(pts), "n0": comp.bc.n0, "aperture": aperture.to_dict()},
        res,
        "proportional",
        bool(ok),
        time.perf_counter() - t0,
        1.0 - min_corr,
        {"correlation": corr, "scale": scale, "image": img, "T": T},
    )


def reciprocity_check(data, tol=1e-6):
    """max |q . E(x_r, x_s; p) - p . E(x_s, x_r; q)| relative to max |E|."""
    t0 = time.perf_counter()
    ap = data.aperture
    if not ap.coincident:
        raise ValueError("reciprocity needs coincident source and receiver rings")
    E = data.values
    P = data.polarizations
    top = float(np.max(np.abs(E), initial=0.0))
    worst = 0.0
    for ip, p in enumerate(P):
        for iq, q in enumerate(P):
            a = E[:, :, ip, :] @ q  # [s, r]
            b = E[:, :, iq, :] @ p  # [s, r]
            worst = max(worst, float(np.max(np.abs(a - b.T), initial=0.0)))
    res = 0.0 if top == 0 else worst / top
    return IdentityReport(
        "reciprocity",
        {"k": data.wave.k, "N": ap.n_s, "R": ap.r_s, "scene": data.scene_digest},
        res,
        "exact",
        res <= tol,
        time.perf_counter() - t0,
        tol,
    )


def run_checks(checks, workers=None):
    """Run zero-argument callables concurrently; reports keep the input order."""
    checks = list(checks)
    if workers is None or workers <= 1:
        return [c() for c in checks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: c(), checks))


def write_reports(reports, fh):
    for r in reports:
        fh.write(r.to_json() + "\n")
