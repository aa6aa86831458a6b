"""Compiled per-point evaluation of all ring-kernel channels.

Mirrors :mod:`chargedrop.azimuthal` and :mod:`chargedrop.kernels` point by
point; the test suite checks the two against each other.
"""
import math

import numpy as np
from numba import njit

from .azimuthal import CLOSED_FORM_MIN_RATIO, N_TRAPEZOID


@njit(cache=True)
def _ke(m):
    a = 1.0
    b = math.sqrt(1.0 - m)
    csum = 0.5 * m
    power = 0.5
    for _ in range(32):
        an = 0.5 * (a + b)
        c = 0.5 * (a - b)
        b = math.sqrt(a * b)
        a = an
        power *= 2.0
        csum += power * c * c
        if abs(a - b) <= 1e-15 * a:
            break
    K = math.pi / (2.0 * a)
    return K, K * (1.0 - csum)


@njit(cache=True)
def _integrals(r, dz, r0, H):
    # H[n_index, k] for n = 1, 3, 5 (rows 0, 1, 2) and k = 0..3
    a = r * r + r0 * r0 + dz * dz
    b = 2.0 * r * r0
    if b >= CLOSED_FORM_MIN_RATIO * a:
        apb = a + b
        m = 2.0 * b / apb
        eps = ((r - r0) ** 2 + dz * dz) / apb
        K, E = _ke(min(m, 1.0 - 1e-16))
        base_m1 = E
        base1 = K
        base3 = E / eps
        base5 = (2.0 * (2.0 - m) * E - eps * K) / (3.0 * eps * eps)
        me = -eps
        s1 = 1.0 / math.sqrt(apb)
        s3 = s1 * s1 * s1
        s5 = s3 * s1 * s1
        im = 1.0 / m
        H[0, 0] = 4.0 * base1 * s1
        H[0, 1] = 8.0 * (me * base1 + base_m1) * im * s1
        H[1, 0] = 4.0 * base3 * s3
        H[1, 1] = 8.0 * (me * base3 + base1) * im * s3
        H[1, 2] = 16.0 * (me * me * base3 + 2.0 * me * base1 + base_m1) * im * im * s3
        H[2, 0] = 4.0 * base5 * s5
        H[2, 1] = 8.0 * (me * base5 + base3) * im * s5
        H[2, 2] = 16.0 * (me * me * base5 + 2.0 * me * base3 + base1) * im * im * s5
        H[2, 3] = 32.0 * (me * me * me * base5 + 3.0 * me * me * base3 + 3.0 * me * base1 + base_m1) * im * im * im * s5
    else:
        for i in range(3):
            for k in range(4):
                H[i, k] = 0.0
        step = 2.0 * math.pi / N_TRAPEZOID
        for q in range(N_TRAPEZOID):
            c = math.cos(step * q)
            w = 1.0 - c
            inv = 1.0 / math.sqrt(a - b * c)
            inv3 = inv * inv * inv
            inv5 = inv3 * inv * inv
            H[0, 0] += inv
            H[0, 1] += inv * w
            H[1, 0] += inv3
            H[1, 1] += inv3 * w
            H[1, 2] += inv3 * w * w
            H[2, 0] += inv5
            H[2, 1] += inv5 * w
            H[2, 2] += inv5 * w * w
            H[2, 3] += inv5 * w * w * w
        for i in range(3):
            for k in range(4):
                H[i, k] *= step


@njit(cache=True)
def channels(r, z, nr, nz, r0, z0, stokes):
    """Kernel channels at flattened points; layout as in :mod:`chargedrop.assembly`."""
    n = r.size
    nc = 13 if stokes else 1
    out = np.empty((n, nc))
    H = np.empty((3, 4))
    for p in range(n):
        rp = r[p]
        rt = r0[p]
        dz = z[p] - z0[p]
        _integrals(rp, dz, rt, H)
        out[p, 0] = H[0, 0]
        if not stokes:
            continue
        dr = rp - rt
        dr2 = dr * dr
        rr0 = rp * rt
        # single layer
        out[p, 1] = H[0, 0] - H[0, 1] + dr2 * (H[1, 0] - H[1, 1]) - rr0 * H[1, 2]
        out[p, 2] = dz * (dr * H[1, 0] + rt * H[1, 1])
        out[p, 3] = dz * (dr * H[1, 0] - rp * H[1, 1])
        out[p, 4] = H[0, 0] + dz * dz * H[1, 0]
        # double layer
        delta = nr[p] * dr + nz[p] * dz
        q = nr[p] * rt
        d_rr = (dr2 * delta * H[2, 0] + dr2 * (q - delta) * H[2, 1]
                + (-dr2 * q - rr0 * delta) * H[2, 2] - rr0 * q * H[2, 3])
        d_rz = dz * (dr * delta * H[2, 0] + (dr * q + rt * delta) * H[2, 1] + rt * q * H[2, 2])
        d_zr = dz * (dr * delta * H[2, 0] + (dr * q - rp * delta) * H[2, 1] - rp * q * H[2, 2])
        d_zz = dz * dz * (delta * H[2, 0] + q * H[2, 1])
        f_rr = (dr2 * delta * H[2, 0] + (dr2 * q - 2.0 * rp * dr * delta) * H[2, 1]
                + (rp * rp * delta - 2.0 * rp * dr * q) * H[2, 2] + rp * rp * q * H[2, 3])
        out[p, 5] = -6.0 * d_rr
        out[p, 6] = -6.0 * d_rz
        out[p, 7] = -6.0 * d_zr
        out[p, 8] = -6.0 * d_zz
        out[p, 9] = -6.0 * f_rr
        out[p, 10] = -6.0 * d_zr
        out[p, 11] = -6.0 * d_zr
        out[p, 12] = -6.0 * d_zz
    return out
