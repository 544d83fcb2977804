"""Cross-correlation kernel of the imaging functional.

For every sampling point z the kernel evaluates

    C(z) = sum_p sum_s sum_i S[z, s, p, i] * F[z, s, p, i]
    F[z, s, p, i] = sum_r sum_j G[z, r, j, i] * conjE[s, r, p, j]

where S is the source-side correlation field and G the receiver dyadic.
Sums run r innermost, then s, then p, each with Kahan compensation, so the
numba and numpy paths produce the same numbers up to rounding of the
individual products.
"""
import numpy as np

from ._accel import USE_NUMBA, njit, prange

__all__ = ["correlate", "correlate_numba", "correlate_numpy", "backpropagate_sum"]


@njit(parallel=True, cache=True)
def _correlate_nb(S, G, cE):
    nz = S.shape[0]
    ns = S.shape[1]
    npol = S.shape[2]
    nr = G.shape[1]
    out = np.zeros(nz, dtype=np.complex128)
    for iz in prange(nz):
        tot = 0j
        tot_c = 0j
        for p in range(npol):
            acc = 0j
            acc_c = 0j
            for s in range(ns):
                f0 = 0j
                f1 = 0j
                c0 = 0j
                c1 = 0j
                for r in range(nr):
                    e0 = cE[s, r, p, 0]
                    e1 = cE[s, r, p, 1]
                    t0 = G[iz, r, 0, 0] * e0 + G[iz, r, 1, 0] * e1
                    t1 = G[iz, r, 0, 1] * e0 + G[iz, r, 1, 1] * e1
                    y = t0 - c0
                    t = f0 + y
                    c0 = (t - f0) - y
                    f0 = t
                    y = t1 - c1
                    t = f1 + y
                    c1 = (t - f1) - y
                    f1 = t
                term = S[iz, s, p, 0] * f0 + S[iz, s, p, 1] * f1
                y = term - acc_c
                t = acc + y
                acc_c = (t - acc) - y
                acc = t
            y = acc - tot_c
            t = tot + y
            tot_c = (t - tot) - y
            tot = t
        out[iz] = tot
    return out


def correlate_numba(S, G, cE):
    return _correlate_nb(
        np.ascontiguousarray(S, dtype=np.complex128),
        np.ascontiguousarray(G, dtype=np.complex128),
        np.ascontiguousarray(cE, dtype=np.complex128),
    )


def _kahan_add(total, comp, value):
    y = value - comp
    t = total + y
    comp = (t - total) - y
    return t, comp


def correlate_numpy(S, G, cE):
    """Vectorised over (z, s); same summation order as the compiled kernel."""
    S = np.asarray(S, dtype=complex)
    G = np.asarray(G, dtype=complex)
    cE = np.asarray(cE, dtype=complex)
    nz, ns, npol, _ = S.shape
    nr = G.shape[1]
    tot = np.zeros(nz, complex)
    tot_c = np.zeros(nz, complex)
    for p in range(npol):
        f0 = np.zeros((nz, ns), complex)
        f1 = np.zeros((nz, ns), complex)
        c0 = np.zeros((nz, ns), complex)
        c1 = np.zeros((nz, ns), complex)
        for r in range(nr):
            e0 = cE[None, :, r, p, 0]
            e1 = cE[None, :, r, p, 1]
            t0 = G[:, r, 0, 0, None] * e0 + G[:, r, 1, 0, None] * e1
            t1 = G[:, r, 0, 1, None] * e0 + G[:, r, 1, 1, None] * e1
            f0, c0 = _kahan_add(f0, c0, t0)
            f1, c1 = _kahan_add(f1, c1, t1)
        term = S[:, :, p, 0] * f0 + S[:, :, p, 1] * f1
        acc = np.zeros(nz, complex)
        acc_c = np.zeros(nz, complex)
        for s in range(ns):
            acc, acc_c = _kahan_add(acc, acc_c, term[:, s])
        tot, tot_c = _kahan_add(tot, tot_c, acc)
    return tot


def correlate(S, G, cE, backend=None):
    """Dispatch to the compiled kernel unless numba is unavailable or disabled."""
    use = USE_NUMBA if backend is None else backend == "numba"
    return correlate_numba(S, G, cE) if use else correlate_numpy(S, G, cE)


def backpropagate_sum(G, cE_sp):
    """sum_r G[z, r]^T conjE[r] for one (source, polarization); shape (Z, 2)."""
    G = np.asarray(G, dtype=complex)
    out = np.zeros((G.shape[0], 2), complex)
    comp = np.zeros_like(out)
    for r in range(G.shape[1]):
        t = np.einsum("zji,j->zi", G[:, r], cE_sp[r])
        out, comp = _kahan_add(out, comp, t)
    return out
