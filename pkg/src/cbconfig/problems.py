"""Residual systems with their search boxes, ready for the multistart engine.

The simple bounds follow the unit-inertia normalization: |x_i| <= 1/sqrt(m_i
sigma_x) and likewise in y.  A very small mass would blow its own bound up,
so the extra body of the (n+1)-body problem is boxed at twice the widest
primary bound instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    COLLISION_TOL,
    CollisionError,
    MassSystem,
    ScaleMatrix,
    _equilibrium_parts,
    _equilibrium_residual_from,
    as_points,
    equilibrium_residual,
    normalize,
    potential,
)
from .derivatives import _equilibrium_jacobian_from, equilibrium_jacobian
from .sampling import Box

__all__ = [
    "ResidualProblem",
    "nbody_problem",
    "direct_problem",
    "restricted_problem",
    "refinement_box",
    "primary_bounds",
]

# Coordinates of an initial guess smaller than this get an absolute refinement
# half-width; the relative rule |x - x0| <= delta |x0| collapses at exact zeros.
DEGENERATE_COORD = 1e-8


@dataclass(frozen=True)
class ResidualProblem:
    """A square/tall residual system restricted to a box."""

    residual: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    box: Box
    masses: np.ndarray  # per-body masses backing the system
    scale: ScaleMatrix
    normalizing: bool  # solutions live on the centered unit-inertia manifold

    @property
    def dimension(self) -> int:
        return self.box.dimension

    def postprocess(self, point: np.ndarray) -> np.ndarray:
        if not self.normalizing:
            return point
        return normalize(self.masses, self.scale, point).coords.reshape(-1)


def _split_combined(combined: Callable[[np.ndarray], tuple]):
    """Residual/jacobian closures over one combined evaluation.

    The local solver evaluates both at the same iterate; a one-slot memo
    avoids recomputing the shared pairwise geometry.
    """
    cache: dict = {"key": None, "value": None}

    def lookup(x: np.ndarray):
        key = x.tobytes()
        if cache["key"] != key:
            cache["key"] = key
            cache["value"] = combined(x)
        return cache["value"]

    return (lambda x: lookup(x)[0]), (lambda x: lookup(x)[1])


def primary_bounds(masses: np.ndarray, S: ScaleMatrix) -> np.ndarray:
    """Per-body half-widths (l_x, l_y), shape (n, 2)."""
    m = np.asarray(masses, dtype=float)
    return 1.0 / np.sqrt(np.outer(m, S.diag))


def _body_box(masses: np.ndarray, S: ScaleMatrix, small: bool) -> Box:
    half = primary_bounds(masses, S)
    if small:
        half = np.vstack([half, 2.0 * half.max(axis=0)])
    flat = half.reshape(-1)
    return Box(-flat, flat)


def _equilibrium_combined(mass_vec: np.ndarray, S: ScaleMatrix):
    """One-pass residual and Jacobian sharing the pairwise geometry."""
    sdiag = S.diag

    def combined(x):
        points = as_points(x)
        diff, dist, u = _equilibrium_parts(mass_vec, points)
        return (
            _equilibrium_residual_from(mass_vec, sdiag, points, diff, dist, u),
            _equilibrium_jacobian_from(mass_vec, sdiag, points, diff, dist, u),
        )

    return combined


def _equilibrium_problem(
    mass_vec: np.ndarray, S: ScaleMatrix, box: Box, normalizing: bool
) -> ResidualProblem:
    residual, jacobian = _split_combined(_equilibrium_combined(mass_vec, S))
    return ResidualProblem(residual, jacobian, box, mass_vec, S, normalizing)


def nbody_problem(masses: MassSystem, S: ScaleMatrix) -> ResidualProblem:
    """The n-body relative equilibrium system in 2n unknowns."""
    m = masses.masses
    return _equilibrium_problem(m, S, _body_box(m, S, small=False), True)


def direct_problem(masses: MassSystem, S: ScaleMatrix) -> ResidualProblem:
    """The full (n+1)-body system in 2n+2 unknowns, small mass last."""
    if masses.small_mass <= 0:
        raise ValueError("direct problem needs a positive small mass")
    return _equilibrium_problem(
        masses.with_small(), S, _body_box(masses.masses, S, small=True), True
    )


def restricted_problem(masses: MassSystem, S: ScaleMatrix, base) -> ResidualProblem:
    """Critical-point system of the massless particle around a frozen base."""
    base_pts = as_points(base)
    m = masses.masses
    half = 2.0 * primary_bounds(m, S).max(axis=0)
    u0 = potential(m, base_pts)  # frozen with the base configuration
    sdiag = S.diag
    eye = np.eye(2)

    def combined(p):
        p = np.asarray(p, dtype=float).reshape(2)
        diff = base_pts - p[None, :]
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        k = int(np.argmin(dist))
        if dist[k] < COLLISION_TOL:
            raise CollisionError(k, base_pts.shape[0], float(dist[k]))
        inv3 = dist**-3
        residual = (m * inv3) @ diff + u0 * sdiag * p
        w = 3.0 * m * inv3 / (dist * dist)
        jac = (
            np.einsum("i,ik,il->kl", w, diff, diff)
            - float(m @ inv3) * eye
            + u0 * np.diag(sdiag)
        )
        return residual, jac

    residual, jacobian = _split_combined(combined)
    return ResidualProblem(residual, jacobian, Box(-half, half), m, S, False)


def refinement_box(initial: np.ndarray, delta: float) -> Box:
    """Relative box around an initial guess, widened at near-zero coordinates."""
    x0 = np.asarray(initial, dtype=float).reshape(-1)
    half = delta * np.abs(x0)
    fallback = delta * np.max(np.abs(x0))
    half[np.abs(x0) < DEGENERATE_COORD] = fallback
    return Box(x0 - half, x0 + half)


def refinement_problem(
    masses: MassSystem, S: ScaleMatrix, initial: np.ndarray, delta: float
) -> ResidualProblem:
    """The (n+1)-body system boxed to a small neighborhood of a guess."""
    if masses.small_mass <= 0:
        raise ValueError("refinement needs a positive small mass")
    return _equilibrium_problem(
        masses.with_small(), S, refinement_box(initial, delta), False
    )
