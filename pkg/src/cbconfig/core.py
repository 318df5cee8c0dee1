"""Planar n-body equilibrium formulas.

Everything in here is a pure function of masses, the diagonal scale matrix
and a planar configuration.  Configurations are accepted either as a flat
vector ``(x1, y1, ..., xn, yn)`` or as an ``(n, 2)`` array; residuals are
returned flat so they can feed a least-squares solver directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "COLLISION_TOL",
    "CollisionError",
    "MassSystem",
    "ScaleMatrix",
    "NormalizedConfiguration",
    "as_points",
    "as_flat",
    "potential",
    "potential_gradient",
    "center_of_mass",
    "moment_of_inertia",
    "lambda_of",
    "normalize",
    "residual_n",
    "residual_n1",
    "equilibrium_residual",
    "objective",
    "restricted_potential",
    "restricted_gradient",
]

# Pairwise distances below this raise CollisionError; solutions live at O(1)
# scale so this is far below anything physical while keeping 1/d^3 finite.
COLLISION_TOL = 1e-9


class CollisionError(ValueError):
    """Two bodies are closer than the collision tolerance."""

    def __init__(self, i: int, j: int, distance: float):
        super().__init__(f"bodies {i} and {j} collide (distance {distance:.3e})")
        self.pair = (i, j)
        self.distance = distance


@dataclass(frozen=True)
class MassSystem:
    """Masses of the n primary bodies plus an optional small extra mass."""

    masses: np.ndarray
    small_mass: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if m.ndim != 1 or m.size < 1:
            raise ValueError("masses must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(m)) or np.any(m <= 0):
            raise ValueError("all masses must be positive and finite")
        if not np.isfinite(self.small_mass) or self.small_mass < 0:
            raise ValueError("small_mass must be nonnegative and finite")
        if self.small_mass > 0 and self.small_mass >= m.min():
            raise ValueError("small_mass must be smaller than every primary mass")
        object.__setattr__(self, "masses", m)

    @property
    def n(self) -> int:
        return self.masses.size

    def with_small(self) -> np.ndarray:
        """Mass vector of all n+1 bodies, the small one last."""
        return np.append(self.masses, self.small_mass)

    @classmethod
    def equal(cls, n: int, mass: float, small_mass: float = 0.0) -> "MassSystem":
        return cls(np.full(n, float(mass)), small_mass)


@dataclass(frozen=True)
class ScaleMatrix:
    """Diagonal positive-definite scale matrix diag(sigma_x, sigma_y)."""

    sigma_x: float = 1.0
    sigma_y: float = 1.0

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ValueError("sigma_x and sigma_y must be positive")

    @property
    def is_central(self) -> bool:
        """Central-configuration mode: isotropic scaling."""
        return self.sigma_x == self.sigma_y

    @property
    def diag(self) -> np.ndarray:
        return np.array([self.sigma_x, self.sigma_y])

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.diag)


@dataclass(frozen=True)
class NormalizedConfiguration:
    """A centered, inertia-normalized configuration and its multiplier."""

    coords: np.ndarray
    lam: float


def as_points(q) -> np.ndarray:
    """Coerce a configuration to an (n, 2) float array."""
    a = np.asarray(q, dtype=float)
    if a.ndim == 1:
        if a.size % 2:
            raise ValueError("flat configuration length must be even")
        a = a.reshape(-1, 2)
    elif a.ndim != 2 or a.shape[1] != 2:
        raise ValueError("configuration must be flat or (n, 2)")
    if not np.all(np.isfinite(a)):
        raise ValueError("configuration has non-finite entries")
    return a


def as_flat(q) -> np.ndarray:
    return as_points(q).reshape(-1)


@lru_cache(maxsize=64)
def _triu(n: int) -> tuple[np.ndarray, np.ndarray]:
    iu, ju = np.triu_indices(n, k=1)
    iu.setflags(write=False)
    ju.setflags(write=False)
    return iu, ju


def _pairwise(points: np.ndarray):
    """Difference tensor diff[i, j] = q_j - q_i and the distance matrix.

    Raises CollisionError on the closest offending pair.
    """
    diff = points[None, :, :] - points[:, None, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    n = points.shape[0]
    if n > 1:
        iu, ju = _triu(n)
        d = dist[iu, ju]
        k = int(np.argmin(d))
        if d[k] < COLLISION_TOL:
            raise CollisionError(int(iu[k]), int(ju[k]), float(d[k]))
    return diff, dist


def potential(masses: MassSystem | np.ndarray, q) -> float:
    """Newtonian force function sum_{i<j} m_i m_j / |q_j - q_i|."""
    m = masses.masses if isinstance(masses, MassSystem) else np.asarray(masses, float)
    points = as_points(q)
    if points.shape[0] != m.size:
        raise ValueError("configuration size does not match mass count")
    _, dist = _pairwise(points)
    iu, ju = _triu(m.size)
    return float(np.sum(m[iu] * m[ju] / dist[iu, ju]))


def potential_gradient(masses: MassSystem | np.ndarray, q) -> np.ndarray:
    """Gradient of the force function, flat layout, block i of size 2."""
    m = masses.masses if isinstance(masses, MassSystem) else np.asarray(masses, float)
    points = as_points(q)
    diff, dist = _pairwise(points)
    np.fill_diagonal(dist, np.inf)
    w = (m[:, None] * m[None, :]) / dist**3
    grad = np.einsum("ij,ijk->ik", w, diff)
    return grad.reshape(-1)


def center_of_mass(masses: MassSystem | np.ndarray, q) -> np.ndarray:
    m = masses.masses if isinstance(masses, MassSystem) else np.asarray(masses, float)
    points = as_points(q)
    return (m @ points) / m.sum()


def moment_of_inertia(masses: MassSystem | np.ndarray, S: ScaleMatrix, q) -> float:
    """S-weighted moment of inertia about the center of mass."""
    m = masses.masses if isinstance(masses, MassSystem) else np.asarray(masses, float)
    points = as_points(q)
    rel = points - center_of_mass(m, points)
    return float(np.sum(m * (rel**2 @ S.diag)))


def lambda_of(masses: MassSystem | np.ndarray, S: ScaleMatrix, q) -> float:
    """Multiplier U / I_S; strictly positive away from collisions."""
    return potential(masses, q) / moment_of_inertia(masses, S, q)


def normalize(
    masses: MassSystem | np.ndarray, S: ScaleMatrix, q
) -> NormalizedConfiguration:
    """Center the configuration and scale it to unit S-moment of inertia."""
    m = masses.masses if isinstance(masses, MassSystem) else np.asarray(masses, float)
    points = as_points(q)
    rel = points - center_of_mass(m, points)
    inertia = float(np.sum(m * (rel**2 @ S.diag)))
    scaled = rel / np.sqrt(inertia)
    return NormalizedConfiguration(scaled, potential(m, scaled))


def _equilibrium_parts(m: np.ndarray, points: np.ndarray):
    """Shared geometry of the equilibrium system: pair differences, distances
    (diagonal set to inf) and the force function value."""
    diff, dist = _pairwise(points)
    iu, ju = _triu(m.size)
    u = float(np.sum(m[iu] * m[ju] / dist[iu, ju]))
    np.fill_diagonal(dist, np.inf)
    return diff, dist, u


def _equilibrium_residual_from(m, sdiag, points, diff, dist, u) -> np.ndarray:
    w = m[None, :] / dist**3
    attract = np.einsum("ij,ijk->ik", w, diff)
    return (attract + u * points * sdiag).reshape(-1)


def equilibrium_residual(masses_vec: np.ndarray, S: ScaleMatrix, q) -> np.ndarray:
    """Relative-equilibrium residual for an arbitrary mass vector.

    Block i is sum_{j != i} m_j (q_j - q_i)/|q_j - q_i|^3 + U(q) S q_i; its
    zeros are exactly the centered, inertia-normalized configurations.
    """
    m = np.asarray(masses_vec, dtype=float)
    points = as_points(q)
    if points.shape[0] != m.size:
        raise ValueError("configuration size does not match mass count")
    diff, dist, u = _equilibrium_parts(m, points)
    return _equilibrium_residual_from(m, S.diag, points, diff, dist, u)


def residual_n(masses: MassSystem, S: ScaleMatrix, q) -> np.ndarray:
    """Residual of the n-body relative equilibrium system."""
    return equilibrium_residual(masses.masses, S, q)


def residual_n1(masses: MassSystem, S: ScaleMatrix, q, p) -> np.ndarray:
    """Residual of the (n+1)-body system with the small mass at p.

    For small_mass == 0 this reduces exactly (same evaluation path) to the
    n-body residual stacked with the restricted gradient at p.
    """
    p = np.asarray(p, dtype=float).reshape(2)
    if masses.small_mass == 0.0:
        return np.concatenate(
            [residual_n(masses, S, q), restricted_gradient(masses, S, q, p)]
        )
    coords = np.vstack([as_points(q), p])
    return equilibrium_residual(masses.with_small(), S, coords)


def objective(residual: np.ndarray) -> float:
    """Half squared Euclidean norm of a residual vector."""
    r = np.asarray(residual, dtype=float)
    return 0.5 * float(r @ r)


def _restricted_terms(masses: MassSystem, S: ScaleMatrix, q, p):
    m = masses.masses
    points = as_points(q)
    p = np.asarray(p, dtype=float).reshape(2)
    diff = points - p[None, :]
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    k = int(np.argmin(dist))
    if dist[k] < COLLISION_TOL:
        raise CollisionError(k, points.shape[0], float(dist[k]))
    return m, points, p, diff, dist


def restricted_potential(
    masses: MassSystem, S: ScaleMatrix, q, p, base_potential: float | None = None
) -> float:
    """Effective potential of a massless particle at p in the field of q.

    ``base_potential`` lets callers reuse the force function of the frozen
    base configuration across many evaluations.
    """
    m, _, p, _, dist = _restricted_terms(masses, S, q, p)
    u = potential(masses, q) if base_potential is None else base_potential
    return float(np.sum(m / dist)) + 0.5 * u * float(p @ (S.diag * p))


def restricted_gradient(
    masses: MassSystem, S: ScaleMatrix, q, p, base_potential: float | None = None
) -> np.ndarray:
    """Gradient of the restricted effective potential with respect to p."""
    m, _, p, diff, dist = _restricted_terms(masses, S, q, p)
    u = potential(masses, q) if base_potential is None else base_potential
    return (m / dist**3) @ diff + u * S.diag * p
