"""Integer-order cylinder functions of real argument.

Thin, validated wrappers around ``scipy.special`` (AMOS / Cephes). All
functions broadcast over array arguments and return ``float64`` or
``complex128`` arrays (numpy scalars for scalar input).
"""
import numpy as np
from scipy import special as _sp

__all__ = [
    "DomainError",
    "bessel_j",
    "bessel_y",
    "hankel1",
    "bessel_j_deriv",
    "hankel1_deriv",
    "signed_order",
]


class DomainError(ValueError):
    """Argument outside the domain of a cylinder function."""


def _check_order(m):
    m = np.asarray(m)
    if m.dtype.kind not in "iu":
        if not np.all(np.equal(np.mod(m, 1), 0)):
            raise DomainError("only integer orders are supported")
        m = m.astype(np.int64)
    if np.any(m < 0):
        raise DomainError("order must be non-negative; use signed_order() for m < 0")
    return m


def bessel_j(m, x):
    """Bessel function of the first kind, J_m(x), for x >= 0."""
    m = _check_order(m)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError("bessel_j requires x >= 0")
    return _sp.jv(m, x)


def bessel_y(m, x):
    """Bessel function of the second kind, Y_m(x), for x > 0."""
    m = _check_order(m)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(np.isnan(x)):
        raise DomainError("bessel_y requires x > 0")
    return _sp.yv(m, x)


def hankel1(m, x):
    """Outgoing Hankel function H_m^(1)(x) = J_m(x) + i Y_m(x)."""
    j = bessel_j(m, x)
    y = bessel_y(m, x)
    return j + 1j * y


def bessel_j_deriv(m, x):
    """J_m'(x) from the recurrence J_m' = J_{m-1} - (m/x) J_m (J_0' = -J_1)."""
    m = _check_order(m)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("bessel_j_deriv requires x >= 0")
    # 0.5 (J_{m-1} - J_{m+1}) avoids the m/x division at x = 0
    return 0.5 * (_sp.jv(m - 1, x) - _sp.jv(m + 1, x))


def hankel1_deriv(m, x):
    """d/dx H_m^(1)(x) = H_{m-1}(x) - (m/x) H_m(x); H_0' = -H_1."""
    m = _check_order(m)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("hankel1_deriv requires x > 0")
    h_m = _sp.jv(m, x) + 1j * _sp.yv(m, x)
    # scipy accepts order -1 here, and H_{-1} = -H_1 covers m = 0
    h_prev = _sp.jv(m - 1, x) + 1j * _sp.yv(m - 1, x)
    return h_prev - (m / x) * h_m


def signed_order(m):
    """Map a signed order to (|m|, sign) with Z_{-m} = (-1)^m Z_m."""
    m = np.asarray(m, dtype=np.int64)
    am = np.abs(m)
    sign = np.where((m < 0) & (am % 2 == 1), -1.0, 1.0)
    return am, sign
