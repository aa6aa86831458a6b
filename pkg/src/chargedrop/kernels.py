"""Free-space kernels and their azimuthal reductions.

Point kernels follow ``d = x - x0`` (source minus target):

    G_ij = delta_ij / |d| + d_i d_j / |d|^3
    T_ijk = -6 d_i d_j d_k / |d|^5

Ring blocks are integrated over the source azimuth with the target fixed at
``phi = 0``. Block index order is ``[..., beta, alpha]``: ``beta`` is the
(r, z) component at the source ring, ``alpha`` the (r, z) component at the
target. The surface measure ``r ds`` is *not* included.
"""
import numpy as np

from .azimuthal import ring_integrals
from .exceptions import SingularKernelError

SINGULAR_M = 1.0 - 1e-14


def stokeslet(x, x0):
    d = np.asarray(x, dtype=float) - np.asarray(x0, dtype=float)
    dist = np.linalg.norm(d, axis=-1)[..., None, None]
    if np.any(dist == 0.0):
        raise SingularKernelError("Stokeslet evaluated at the pole")
    return np.eye(3) / dist + d[..., :, None] * d[..., None, :] / dist ** 3


def stresslet(x, x0):
    d = np.asarray(x, dtype=float) - np.asarray(x0, dtype=float)
    dist = np.linalg.norm(d, axis=-1)[..., None, None, None]
    if np.any(dist == 0.0):
        raise SingularKernelError("stresslet evaluated at the pole")
    ddd = d[..., :, None, None] * d[..., None, :, None] * d[..., None, None, :]
    return -6.0 * ddd / dist ** 5


def _check_regular(r, dz, r0):
    denom = (r + r0) ** 2 + dz ** 2
    m = 4.0 * r * r0 / denom
    if np.any(m >= SINGULAR_M):
        raise SingularKernelError("target lies on the source ring; use the self-element path")


def laplace_from_integrals(I):
    return I[1, 0]


def single_layer_from_integrals(I, r, dz, r0):
    """Azimuthally integrated Stokeslet, shape ``(..., 2, 2)``."""
    dr = r - r0
    out = np.empty(np.shape(I[1, 0]) + (2, 2))
    out[..., 0, 0] = I[1, 0] - I[1, 1] + dr * dr * (I[3, 0] - I[3, 1]) - r * r0 * I[3, 2]
    out[..., 0, 1] = dz * (dr * I[3, 0] + r0 * I[3, 1])
    out[..., 1, 0] = dz * (dr * I[3, 0] - r * I[3, 1])
    out[..., 1, 1] = I[1, 0] + dz * dz * I[3, 0]
    return out


def _poly(I, coeffs):
    return sum(c * I[5, k] for k, c in enumerate(coeffs))


def double_layer_from_integrals(I, r, dz, r0, nr, nz):
    """Azimuthally integrated ``T_ijk n_k``.

    Returns ``(D, D0)``. ``D`` couples the source velocity in its local
    (r, z) frame; ``D0`` couples a *fixed* Cartesian vector equal to the
    target's local frame, which is what the rigid-motion subtraction needs.
    All factors are linear in ``w = 1 - cos(phi)``; ``delta`` is the normal
    offset of the source point from the target, zero on the target's own
    element.
    """
    dr = r - r0
    delta = nr * dr + nz * dz
    q = nr * r0  # n.d = delta + q w
    dr2 = dr * dr
    shape = np.shape(I[1, 0])
    D = np.empty(shape + (2, 2))
    D0 = np.empty(shape + (2, 2))
    # (r - r0 cos) = dr + r0 w ;  (r cos - r0) = dr - r w
    D[..., 0, 0] = _poly(I, (dr2 * delta, dr2 * (q - delta), -dr2 * q - r * r0 * delta, -r * r0 * q))
    D[..., 0, 1] = dz * _poly(I, (dr * delta, dr * q + r0 * delta, r0 * q))
    D[..., 1, 0] = dz * _poly(I, (dr * delta, dr * q - r * delta, -r * q))
    D[..., 1, 1] = dz * dz * _poly(I, (delta, q))
    D0[..., 0, 0] = _poly(I, (dr2 * delta, dr2 * q - 2.0 * r * dr * delta, r * r * delta - 2.0 * r * dr * q, r * r * q))
    D0[..., 0, 1] = D[..., 1, 0]
    D0[..., 1, 0] = D[..., 1, 0]
    D0[..., 1, 1] = D[..., 1, 1]
    return -6.0 * D, -6.0 * D0


def ring_laplace_kernel(target, source_ring):
    """``oint dphi / |x - x0|`` for a ring ``(r, z)`` and a target ``(r0, z0)``."""
    r0, z0 = target
    r, z = source_ring
    dz = np.asarray(z, dtype=float) - z0
    _check_regular(r, dz, r0)
    return laplace_from_integrals(ring_integrals(r, dz, r0, keys=((1, 0),)))


def ring_stokes_kernels(target, source_ring, normal=(0.0, 1.0)):
    """Single- and double-layer ring blocks ``(S, D, D0)`` for one source ring.

    ``normal`` is the unit meridian normal ``(n_r, n_z)`` of the source.
    """
    r0, z0 = target
    r, z = source_ring
    nr, nz = normal
    dz = np.asarray(z, dtype=float) - z0
    _check_regular(r, dz, r0)
    I = ring_integrals(r, dz, r0)
    S = single_layer_from_integrals(I, r, dz, r0)
    D, D0 = double_layer_from_integrals(I, r, dz, r0, nr, nz)
    return S, D, D0
