"""Complete elliptic integrals of the first and second kind.

The parameter convention is ``m = k**2``. Both integrals are evaluated
together with the arithmetic-geometric mean, vectorised over ``m``.
"""
from dataclasses import dataclass

import numpy as np

_MAX_ITER = 32
_RTOL = 1e-15


class EllipticDomainError(ValueError):
    pass


@dataclass(frozen=True)
class EllipticPair:
    K: np.ndarray
    E: np.ndarray
    m: np.ndarray


def _agm_KE(m):
    # K = pi / (2 AGM(1, sqrt(1-m)));  E = K (1 - sum 2^(n-1) c_n^2),  c_0^2 = m
    a = np.ones_like(m)
    b = np.sqrt(1.0 - m)
    csum = 0.5 * m
    power = 0.5
    for _ in range(_MAX_ITER):
        a_next = 0.5 * (a + b)
        c = 0.5 * (a - b)
        b = np.sqrt(a * b)
        a = a_next
        power *= 2.0
        csum = csum + power * c * c
        if np.all(np.abs(a - b) <= _RTOL * a):
            break
    K = np.pi / (2.0 * a)
    return K, K * (1.0 - csum)


def ellipke(m):
    """Return ``(K(m), E(m))`` for ``0 <= m < 1`` (scalars or arrays).

    No domain checking; callers inside the kernel loops guarantee the range.
    """
    m = np.asarray(m, dtype=float)
    return _agm_KE(m)


def complete_elliptic(m) -> EllipticPair:
    """Checked front end of :func:`ellipke`.

    Raises
    ------
    EllipticDomainError
        If any ``m`` lies outside ``[0, 1)``.
    """
    m = np.asarray(m, dtype=float)
    if np.any(~np.isfinite(m)) or np.any(m < 0.0) or np.any(m >= 1.0):
        raise EllipticDomainError("complete elliptic integrals need 0 <= m < 1")
    K, E = _agm_KE(m)
    return EllipticPair(K=K, E=E, m=m)
