"""Azimuthal integrals of inverse powers of the source-target distance.

For a source ring of radius ``r`` and a target at radius ``r0`` with axial
offset ``dz`` the squared distance is ``rho^2 = a - b cos(phi)`` with
``a = r^2 + r0^2 + dz^2`` and ``b = 2 r r0``. This module evaluates

    H[n, k] = int_0^{2 pi} (1 - cos(phi))^k / rho^n  dphi

for ``n in (1, 3, 5)`` and ``k <= 3``. Powers of ``w = 1 - cos(phi)`` rather
than ``cos(phi)`` keep the near-singular combinations free of cancellation:
with ``phi = pi - 2 theta``, ``w = 2 cos^2(theta)`` and
``rho^2 = (a + b)(1 - m sin^2(theta))``, and each integral reduces to
``K(m)``, ``E(m)`` and ``1 - m`` (which is formed directly, never as a
difference). When ``b/a`` is small the reduction divides by powers of ``m``;
there the integrand is smooth in ``phi`` and the periodic trapezoid rule
converges geometrically instead.
"""
from math import comb

import numpy as np

from .elliptic import ellipke

# below this b/a the trapezoid rule is used; its error is ~ (0.1)^M
CLOSED_FORM_MIN_RATIO = 0.2
N_TRAPEZOID = 24

KEYS = ((1, 0), (1, 1), (3, 0), (3, 1), (3, 2), (5, 0), (5, 1), (5, 2), (5, 3))


def _closed_form(a, b, amb, keys):
    apb = a + b
    m = 2.0 * b / apb
    eps = amb / apb  # 1 - m
    K, E = ellipke(np.minimum(m, 1.0 - 1e-16))
    # B[n] = int_0^{pi/2} (1 - m sin^2)^(-n/2) dtheta
    base = {-1: E, 1: K, 3: E / eps, 5: (2.0 * (2.0 - m) * E - eps * K) / (3.0 * eps * eps)}
    out = {}
    for n, k in keys:
        # cos^2 = (q - (1 - m)) / m with q = 1 - m sin^2
        acc = 0.0
        for i in range(k + 1):
            acc = acc + comb(k, i) * (-eps) ** (k - i) * base[n - 2 * i]
        out[n, k] = 4.0 * 2.0 ** k * acc / (m ** k * apb ** (0.5 * n))
    return out


def _trapezoid(a, b, keys):
    phi = 2.0 * np.pi * np.arange(N_TRAPEZOID) / N_TRAPEZOID
    w = 1.0 - np.cos(phi)
    step = 2.0 * np.pi / N_TRAPEZOID
    inv = 1.0 / np.sqrt(a[:, None] - b[:, None] * np.cos(phi))
    powers = {1: inv, 3: inv ** 3}
    powers[5] = powers[3] * inv * inv
    return {(n, k): step * (powers[n] @ w ** k) for n, k in keys}


def ring_integrals(r, dz, r0, keys=KEYS):
    """Return ``{(n, k): H[n, k]}`` broadcast over ``r``, ``dz``, ``r0``.

    The target must not lie on the source ring.
    """
    r, dz, r0 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (r, dz, r0)))
    shape = r.shape
    r, dz, r0 = r.ravel(), dz.ravel(), r0.ravel()
    a = r * r + r0 * r0 + dz * dz
    b = 2.0 * r * r0
    amb = (r - r0) ** 2 + dz * dz
    closed = b >= CLOSED_FORM_MIN_RATIO * a
    out = {k: np.empty(r.size) for k in keys}
    if np.any(closed):
        cf = _closed_form(a[closed], b[closed], amb[closed], keys)
        for k in keys:
            out[k][closed] = cf[k]
    if not np.all(closed):
        op = ~closed
        tr = _trapezoid(a[op], b[op], keys)
        for k in keys:
            out[k][op] = tr[k]
    return {k: v.reshape(shape) for k, v in out.items()}
