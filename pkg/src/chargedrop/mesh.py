"""Axisymmetric generating curves: construction, geometry and remeshing.

A drop surface is the revolution about the z axis of a polyline in the
(r, z) half plane. Node 0 is the north pole, node N the south pole, and
each straight segment sweeps a conical ring (frustum) element.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import DegenerateGeometryError, InvalidParameterError


@dataclass
class GeneratingCurve:
    """Meridian polyline, ``nodes[k] = (r_k, z_k)``."""

    nodes: np.ndarray

    def __post_init__(self):
        self.nodes = np.array(self.nodes, dtype=float)
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2 or len(self.nodes) < 3:
            raise InvalidParameterError("nodes must be an (N+1, 2) array with N >= 2")

    @property
    def r(self) -> np.ndarray:
        return self.nodes[:, 0]

    @property
    def z(self) -> np.ndarray:
        return self.nodes[:, 1]

    @property
    def n_elements(self) -> int:
        return len(self.nodes) - 1

    @property
    def closed(self) -> bool:
        """True when both endpoints sit on the symmetry axis."""
        return self.nodes[0, 0] == 0.0 and self.nodes[-1, 0] == 0.0

    def copy(self) -> "GeneratingCurve":
        return GeneratingCurve(self.nodes.copy())

    def validate(self):
        """Check the closed-drop invariants, raising on the first violation."""
        r = self.r
        if not self.closed:
            raise InvalidParameterError("first and last nodes must lie on the axis")
        if np.any(r[1:-1] <= 0.0):
            raise InvalidParameterError("interior nodes must have r > 0")
        lengths = np.hypot(*np.diff(self.nodes, axis=0).T)
        if np.any(lengths <= 1e-12 * _diameter(self.nodes)):
            raise DegenerateGeometryError("coincident consecutive nodes")
        return self


@dataclass
class SurfaceGeometry:
    normals: np.ndarray
    mean_curvature: np.ndarray
    ring_areas: np.ndarray
    arc_lengths: np.ndarray
    midpoints: np.ndarray
    node_normals: np.ndarray
    node_curvature: np.ndarray


@dataclass
class RemeshPolicy:
    """Target node count and curvature weighting for :func:`remesh`.

    ``kappa_ref=None`` means the median absolute element curvature.
    """

    n_elements: Optional[int] = None
    power: float = 1.0
    kappa_ref: Optional[float] = None


def _diameter(nodes):
    span = nodes.max(axis=0) - nodes.min(axis=0)
    return float(np.hypot(*span))


def spherical_harmonic_y20(theta):
    return 0.25 * np.sqrt(5.0 / np.pi) * (3.0 * np.cos(theta) ** 2 - 1.0)


def make_perturbed_sphere(R=1.0, eps=0.0, l=2, N=64) -> GeneratingCurve:
    """Sample ``r(theta) = R + eps * Y_2^0(theta)`` at N+1 polar angles."""
    if l != 2:
        raise InvalidParameterError("only the l = 2 harmonic is supported")
    if N < 16:
        raise InvalidParameterError("N must be at least 16")
    if not (R > 0.0) or not (0.0 <= eps < 0.5 * R):
        raise InvalidParameterError("need R > 0 and 0 <= eps < R/2")
    theta = np.linspace(0.0, np.pi, N + 1)
    rad = R + eps * spherical_harmonic_y20(theta)
    nodes = np.column_stack([rad * np.sin(theta), rad * np.cos(theta)])
    nodes[0, 0] = nodes[-1, 0] = 0.0
    return GeneratingCurve(nodes)


def _node_meridian_curvature(nodes, closed):
    # signed curvature of the circle through three consecutive nodes;
    # positive for a convex drop traversed pole to pole
    if closed:
        # mirror images across the axis act as ghost neighbours of the poles
        ext = np.vstack([nodes[1] * [-1.0, 1.0], nodes, nodes[-2] * [-1.0, 1.0]])
    else:
        ext = nodes
    e1 = ext[1:-1] - ext[:-2]
    e2 = ext[2:] - ext[1:-1]
    chord = ext[2:] - ext[:-2]
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    denom = np.hypot(*e1.T) * np.hypot(*e2.T) * np.hypot(*chord.T)
    kappa = -2.0 * cross / denom
    if not closed:
        kappa = np.concatenate([kappa[:1], kappa, kappa[-1:]])
    return kappa


def geometry(curve: GeneratingCurve) -> SurfaceGeometry:
    nodes = curve.nodes
    seg = np.diff(nodes, axis=0)
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    if np.any(lengths < 1e-12 * _diameter(nodes)):
        raise DegenerateGeometryError("element length below 1e-12 of the curve diameter")
    tangents = seg / lengths[:, None]
    normals = np.column_stack([-tangents[:, 1], tangents[:, 0]])
    mid = 0.5 * (nodes[1:] + nodes[:-1])
    areas = np.pi * (nodes[1:, 0] + nodes[:-1, 0]) * lengths

    closed = curve.closed
    k_node = _node_meridian_curvature(nodes, closed)
    k_merid = 0.5 * (k_node[1:] + k_node[:-1])
    mean_k = 0.5 * (k_merid + normals[:, 0] / mid[:, 0])

    nn = np.empty_like(nodes)
    nn[1:-1] = normals[1:] + normals[:-1]
    nn[0], nn[-1] = normals[0], normals[-1]
    if closed:
        nn[0] = [0.0, np.sign(normals[0, 1])]
        nn[-1] = [0.0, np.sign(normals[-1, 1])]
    nn /= np.hypot(nn[:, 0], nn[:, 1])[:, None]

    node_k = k_node.copy()
    inner = slice(1, -1) if closed else slice(None)
    with np.errstate(divide="ignore", invalid="ignore"):
        az = nn[:, 0] / nodes[:, 0]
    node_k[inner] = 0.5 * (k_node[inner] + az[inner])

    return SurfaceGeometry(
        normals=normals,
        mean_curvature=mean_k,
        ring_areas=areas,
        arc_lengths=lengths,
        midpoints=mid,
        node_normals=nn,
        node_curvature=node_k,
    )


def enclosed_volume(curve: GeneratingCurve) -> float:
    """Exact volume of revolution of the polyline (sum of signed frusta)."""
    r, z = curve.r, curve.z
    return float(np.sum(np.pi / 3.0 * (r[:-1] ** 2 + r[:-1] * r[1:] + r[1:] ** 2) * (z[:-1] - z[1:])))


def surface_area(curve: GeneratingCurve) -> float:
    r, z = curve.r, curve.z
    return float(np.sum(np.pi * (r[:-1] + r[1:]) * np.hypot(np.diff(r), np.diff(z))))


def _smooth_meridian(nodes):
    """Cubic spline through the nodes in chord length, odd in r across the axis."""
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(nodes, axis=0).T))])
    # two mirrored ghost nodes at each pole make the spline symmetric there
    pre = nodes[2:0:-1] * [-1.0, 1.0]
    post = nodes[-2:-4:-1] * [-1.0, 1.0]
    s_pre = -(s[2:0:-1])
    s_post = s[-1] + (s[-1] - s[-2:-4:-1])
    ext_s = np.concatenate([s_pre, s, s_post])
    ext = np.vstack([pre, nodes, post])
    return s, CubicSpline(ext_s, ext, axis=0)


def remesh(curve: GeneratingCurve, policy: Optional[RemeshPolicy] = None) -> GeneratingCurve:
    """Redistribute nodes by arclength equidistribution of ``(1 + |k|/k_ref)**p``.

    New nodes are placed on a cubic spline through the old nodes; the two
    pole nodes are kept exactly.
    """
    policy = policy or RemeshPolicy()
    nodes = curve.nodes
    n_new = policy.n_elements or curve.n_elements
    geom = geometry(curve)
    s, spline = _smooth_meridian(nodes)

    kappa = np.abs(geom.node_curvature)
    kref = policy.kappa_ref if policy.kappa_ref is not None else float(np.median(np.abs(geom.mean_curvature)))
    if not kref > 0.0:
        kref = 1.0
    w = (1.0 + kappa / kref) ** policy.power
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(s))])
    targets = np.linspace(0.0, cum[-1], n_new + 1)
    s_new = np.interp(targets, cum, s)
    s_new[0], s_new[-1] = s[0], s[-1]
    if np.any(np.diff(s_new) <= 1e-12 * s[-1]):
        raise DegenerateGeometryError("remeshing would produce coincident nodes")
    new_nodes = spline(s_new)
    new_nodes[0] = nodes[0]
    new_nodes[-1] = nodes[-1]
    if np.any(new_nodes[1:-1, 0] <= 0.0):
        raise DegenerateGeometryError("remeshed interior node crossed the axis")
    return GeneratingCurve(new_nodes)
