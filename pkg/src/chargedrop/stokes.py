"""Interfacial velocity of a drop in an immiscible fluid (Stokes flow).

With ``n`` the outward normal, ``d = x - x0`` and ``lam = mu1/mu2``, the
velocity on the interface solves

    u(x0) = -1/(4 pi (mu1 + mu2)) int f . G dS
            + (mu2 - mu1)/(mu2 + mu1) * 1/(4 pi) PV int u . T . n dS

where ``f = (gamma kappa - sigma^2/(2 eps0)) n`` is the traction jump.

Two identities make the quadrature robust. The single layer of a normal
field integrates to zero over a closed surface, so row ``i`` uses
``f_j - f_i``. The double layer of a rigid translation equals ``-4 pi`` at a
smooth point, so row ``i`` subtracts ``u_i`` under the integral.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .assembly import RingOperators, assemble
from .electrostatics import lu_solve_dense
from .kernels import ring_stokes_kernels, stokeslet, stresslet  # noqa: F401
from .mesh import GeneratingCurve, SurfaceGeometry


@dataclass
class TractionJump:
    """Normal traction jump; ``magnitude`` times the element normals."""

    magnitude: np.ndarray
    normals: np.ndarray

    @property
    def f(self) -> np.ndarray:
        return self.magnitude[:, None] * self.normals


@dataclass
class VelocityField:
    u: np.ndarray

    def normal_component(self, normals):
        return np.einsum("ij,ij->i", self.u, normals)


def single_layer_velocity(geom: SurfaceGeometry, traction: TractionJump, ops: RingOperators, mu_sum: float):
    # P[i, j, alpha] = sum_beta n_{j beta} S[i, j, beta, alpha]
    P = np.einsum("jb,ijba->ija", geom.normals, ops.single_layer)
    F = traction.magnitude
    u = np.einsum("j,ija->ia", F, P) - F[:, None] * P.sum(axis=1)
    return -u / (4.0 * np.pi * mu_sum)


def double_layer_matrix(ops: RingOperators) -> np.ndarray:
    """Discrete ``(1/4pi) PV int u.T.n dS`` as a ``(2N, 2N)`` matrix with rigid subtraction."""
    N = ops.double_layer.shape[0]
    D = np.transpose(ops.double_layer, (0, 3, 1, 2)).reshape(2 * N, 2 * N)
    fixed = ops.double_layer_fixed.sum(axis=1)  # (i, beta, alpha)
    M = D.copy()
    for i in range(N):
        M[2 * i:2 * i + 2, 2 * i:2 * i + 2] -= fixed[i].T
        M[2 * i:2 * i + 2, 2 * i:2 * i + 2] -= 4.0 * np.pi * np.eye(2)
    return M / (4.0 * np.pi)


def solve_velocity(
    curve: GeneratingCurve,
    geom: SurfaceGeometry,
    traction: TractionJump,
    params,
    operators: Optional[RingOperators] = None,
) -> VelocityField:
    ops = operators if operators is not None and operators.single_layer is not None else assemble(curve, geom)
    mu_sum = params.mu1 + params.mu2
    rhs = single_layer_velocity(geom, traction, ops, mu_sum)
    contrast = (params.mu2 - params.mu1) / mu_sum
    if contrast == 0.0:
        return VelocityField(rhs)
    N = curve.n_elements
    M = np.eye(2 * N) - contrast * double_layer_matrix(ops)
    u = lu_solve_dense(M, rhs.ravel()).reshape(N, 2)
    return VelocityField(u)
