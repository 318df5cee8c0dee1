import numpy as np
import pytest

from cbconfig import MassSystem, ScaleMatrix


@pytest.fixture
def identity_scale():
    return ScaleMatrix()


@pytest.fixture
def bc_scale():
    return ScaleMatrix(1.0, 0.3)


@pytest.fixture
def two_body():
    return MassSystem.equal(2, 0.1)


@pytest.fixture
def pair_sqrt5():
    """Normalized two-body solution: equal masses at (-sqrt5, 0), (sqrt5, 0)."""
    r = np.sqrt(5.0)
    return np.array([-r, 0.0, r, 0.0])


@pytest.fixture
def equilateral3():
    """Normalized three-body solution: equal masses 0.1, circumradius sqrt(10/3)."""
    radius = np.sqrt(10.0 / 3.0)
    angles = np.pi / 2 + 2.0 * np.pi * np.arange(3) / 3
    return radius * np.column_stack([np.cos(angles), np.sin(angles)])


def random_config(rng, n, min_sep=0.3, span=2.0):
    """Collision-free random configuration with pairwise distances >= min_sep."""
    while True:
        q = rng.uniform(-span, span, (n, 2))
        d = np.linalg.norm(q[None, :] - q[:, None], axis=-1)
        iu = np.triu_indices(n, 1)
        if d[iu].min() >= min_sep:
            return q


def central_difference(f, x, h):
    """Central finite-difference Jacobian of vector- or scalar-valued f."""
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(f(x))
    jac = np.empty((f0.size, x.size))
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        jac[:, i] = (np.atleast_1d(f(x + e)) - np.atleast_1d(f(x - e))) / (2 * h)
    return jac
