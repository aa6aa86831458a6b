import numpy as np
import pytest

from chargedrop.mesh import GeneratingCurve, make_perturbed_sphere


def sphere(N=64, R=1.0):
    return make_perturbed_sphere(R=R, eps=0.0, l=2, N=N)


def ellipsoid(a, c, N=64):
    """Spheroid with equatorial radius ``a`` and polar half-axis ``c``."""
    th = np.linspace(0.0, np.pi, N + 1)
    nodes = np.column_stack([a * np.sin(th), c * np.cos(th)])
    nodes[0, 0] = nodes[-1, 0] = 0.0
    return GeneratingCurve(nodes)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
