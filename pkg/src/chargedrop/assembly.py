"""Collocation assembly of the ring operators over conical-ring elements.

Targets are element midpoints; every source element is integrated along its
meridian with Gauss-Legendre rules. Pairs closer than ``NEAR_FACTOR``
source lengths get the high-order rule; the self element is split at the
target and its logarithmic part is integrated analytically.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .azimuthal import KEYS, ring_integrals
from ._fastkernels import channels
from .mesh import GeneratingCurve, SurfaceGeometry, geometry

N_FAR = 8
N_NEAR = 16
N_SELF = 16
NEAR_FACTOR = 2.0
CHUNK_POINTS = 400_000
# the numpy path is kept as the reference the compiled kernels are tested against
USE_COMPILED = True

# channel layout of the stacked kernel output
LAPLACE = 0
SL = slice(1, 5)
DL = slice(5, 9)
DL0 = slice(9, 13)
N_CHANNELS = 13
# channels whose self-element integrand behaves like -2 ln|t| (t = arclength offset)
LOG_CHANNELS = (LAPLACE, 1, 4)


@dataclass
class RingOperators:
    """Element-integrated kernels, all indexed ``[target i, source j, ...]``.

    ``laplace[i, j]`` is ``int_j r oint dphi/|x - x_i| ds``; the Stokes blocks
    have trailing ``(beta, alpha)`` axes as in :mod:`chargedrop.kernels`.
    """

    laplace: np.ndarray
    single_layer: Optional[np.ndarray] = None
    double_layer: Optional[np.ndarray] = None
    double_layer_fixed: Optional[np.ndarray] = None


def _channels_reference(r, z, nr, nz, r0, z0, stokes):
    dz = z - z0
    keys = KEYS if stokes else ((1, 0),)
    I = ring_integrals(r, dz, r0, keys=keys)
    out = np.zeros(r.shape + (N_CHANNELS if stokes else 1,))
    out[..., LAPLACE] = kernels.laplace_from_integrals(I)
    if stokes:
        out[..., SL] = kernels.single_layer_from_integrals(I, r, dz, r0).reshape(r.shape + (4,))
        D, D0 = kernels.double_layer_from_integrals(I, r, dz, r0, nr, nz)
        out[..., DL] = D.reshape(r.shape + (4,))
        out[..., DL0] = D0.reshape(r.shape + (4,))
    return out


def _channels_compiled(r, z, nr, nz, r0, z0, stokes):
    r, z, nr, nz, r0, z0 = (np.ascontiguousarray(x, dtype=float).ravel() for x in np.broadcast_arrays(r, z, nr, nz, r0, z0))
    return channels(r, z, nr, nz, r0, z0, stokes)


def _channels(r, z, nr, nz, r0, z0, stokes):
    shape = np.broadcast_shapes(np.shape(r), np.shape(z), np.shape(nr), np.shape(nz), np.shape(r0), np.shape(z0))
    if USE_COMPILED:
        return _channels_compiled(r, z, nr, nz, r0, z0, stokes).reshape(shape + (-1,))
    return _channels_reference(*np.broadcast_arrays(r, z, nr, nz, r0, z0), stokes)


def _integrate_pairs(ti, sj, nodes, geom, offsets, weights, stokes):
    """Integrate ``r * kernel`` over source ``sj`` for targets ``ti`` (1-D index arrays).

    ``offsets`` are arclength positions relative to each element's start as a
    fraction of its length, ``weights`` are fractions of its length.
    """
    p0 = nodes[sj]
    tang = (nodes[sj + 1] - p0)
    h = geom.arc_lengths[sj]
    pts = p0[:, None, :] + offsets[None, :, None] * tang[:, None, :]
    r, z = pts[..., 0], pts[..., 1]
    n = geom.normals[sj]
    tgt = geom.midpoints[ti]
    vals = _channels(r, z, n[:, 0, None], n[:, 1, None], tgt[:, 0, None], tgt[:, 1, None], stokes)
    return np.einsum("pq,pqc->pc", (weights[None, :] * h[:, None]) * r, vals)


def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def assemble(curve: GeneratingCurve, geom: Optional[SurfaceGeometry] = None, stokes: bool = True) -> RingOperators:
    geom = geom if geom is not None else geometry(curve)
    nodes = curve.nodes
    N = curve.n_elements
    nc = N_CHANNELS if stokes else 1
    out = np.empty((N, N, nc))

    # far field, all pairs, chunked over targets
    xf, wf = _gauss(N_FAR)
    rows = max(1, CHUNK_POINTS // (N * N_FAR))
    jj = np.arange(N)
    for start in range(0, N, rows):
        ti = np.arange(start, min(N, start + rows))
        T, S = np.meshgrid(ti, jj, indexing="ij")
        out[ti] = _integrate_pairs(T.ravel(), S.ravel(), nodes, geom, xf, wf, stokes).reshape(len(ti), N, nc)

    # near pairs: distance from target to source segment below NEAR_FACTOR * h_j
    mid = geom.midpoints
    a = nodes[:-1][None, :, :]
    seg = (nodes[1:] - nodes[:-1])[None, :, :]
    rel = mid[:, None, :] - a
    lam = np.clip(np.einsum("ijk,ijk->ij", rel, seg) / np.einsum("ijk,ijk->ij", seg, seg), 0.0, 1.0)
    dist = np.linalg.norm(rel - lam[..., None] * seg, axis=-1)
    near = dist < NEAR_FACTOR * geom.arc_lengths[None, :]
    np.fill_diagonal(near, False)
    ti, sj = np.nonzero(near)
    if len(ti):
        xn, wn = _gauss(N_NEAR)
        out[ti, sj] = _integrate_pairs(ti, sj, nodes, geom, xn, wn, stokes)

    # self element: two halves meeting at the midpoint, log part analytic
    xs, ws = _gauss(N_SELF)
    offs = np.concatenate([0.5 * xs, 0.5 + 0.5 * xs])
    wts = np.concatenate([0.5 * ws, 0.5 * ws])
    idx = np.arange(N)
    h = geom.arc_lengths
    p0 = nodes[:-1]
    tang = nodes[1:] - p0
    pts = p0[:, None, :] + offs[None, :, None] * tang[:, None, :]
    r, z = pts[..., 0], pts[..., 1]
    n = geom.normals
    vals = _channels(r, z, n[:, 0, None], n[:, 1, None], mid[:, 0, None], mid[:, 1, None], stokes)
    logt = np.log(np.abs(offs - 0.5)[None, :] * h[:, None])
    for c in LOG_CHANNELS:
        if c < nc:
            vals[..., c] += 2.0 * logt / r
    selfint = np.einsum("pq,pqc->pc", (wts[None, :] * h[:, None]) * r, vals)
    # int_{-h/2}^{h/2} ln|t| dt = h (ln(h/2) - 1)
    log_exact = h * (np.log(0.5 * h) - 1.0)
    for c in LOG_CHANNELS:
        if c < nc:
            selfint[:, c] -= 2.0 * log_exact
    out[idx, idx] = selfint

    ops = RingOperators(laplace=out[..., LAPLACE].copy())
    if stokes:
        ops.single_layer = out[..., SL].reshape(N, N, 2, 2)
        ops.double_layer = out[..., DL].reshape(N, N, 2, 2)
        ops.double_layer_fixed = out[..., DL0].reshape(N, N, 2, 2)
    return ops
