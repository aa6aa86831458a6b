"""Surface charge on a conducting drop.

The potential is ``V(x0) = (1/4 pi) int sigma(x) / |x - x0| dS`` (the
``eps0 = 1`` normalisation), constant on the surface, and the total charge
is fixed. Collocation at element midpoints plus the charge row gives one
bordered dense system, solved by LU.
"""
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .assembly import RingOperators, assemble
from .exceptions import SingularMatrixError
from .kernels import ring_laplace_kernel  # noqa: F401  (public kernel surface)
from .mesh import GeneratingCurve, SurfaceGeometry


@dataclass
class ChargeSolution:
    sigma: np.ndarray
    potential: float


def lu_solve_dense(M, rhs):
    """``M x = rhs`` via LU with partial pivoting, raising on a singular matrix."""
    if not np.all(np.isfinite(M)):
        raise SingularMatrixError("non-finite entries in the system matrix")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    diag = np.abs(np.diag(lu))
    if diag.min() <= 1e-14 * diag.max():
        raise SingularMatrixError("zero pivot in LU factorisation")
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def solve_charge(
    curve: GeneratingCurve,
    geom: SurfaceGeometry,
    Q: float,
    operators: Optional[RingOperators] = None,
) -> ChargeSolution:
    ops = operators if operators is not None else assemble(curve, geom, stokes=False)
    N = curve.n_elements
    M = np.zeros((N + 1, N + 1))
    M[:N, :N] = ops.laplace / (4.0 * np.pi)
    M[:N, N] = -1.0
    M[N, :N] = geom.ring_areas
    rhs = np.zeros(N + 1)
    rhs[N] = Q
    x = lu_solve_dense(M, rhs)
    return ChargeSolution(sigma=x[:N], potential=float(x[N]))


def potential_residual(curve, geom, sol: ChargeSolution, operators=None):
    """Largest collocation residual of the integral equation, relative to V."""
    ops = operators if operators is not None else assemble(curve, geom, stokes=False)
    V = ops.laplace @ sol.sigma / (4.0 * np.pi)
    scale = abs(sol.potential) if sol.potential != 0.0 else 1.0
    return float(np.max(np.abs(V - sol.potential)) / scale)


def electric_traction(sol: ChargeSolution, params) -> np.ndarray:
    """Outward normal traction ``sigma^2 / (2 eps0)`` per element."""
    return sol.sigma ** 2 / (2.0 * params.eps0)
