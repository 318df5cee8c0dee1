"""Analytic derivatives of the equilibrium residuals and the potential.

All second-order terms come from the closed-form derivatives of 1/|q_j - q_i|;
finite differences are kept out of the library and used only as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    COLLISION_TOL,
    CollisionError,
    MassSystem,
    ScaleMatrix,
    _triu,
    as_points,
    potential,
)

__all__ = [
    "HessianReport",
    "RANK_TOL",
    "potential_hessian",
    "equilibrium_jacobian",
    "jacobian_n",
    "jacobian_n1",
    "jacobian_restricted",
    "hessian",
    "restricted_hessian",
]

# Singular values below RANK_TOL * s_max count as zero when deciding the
# 2n-1 vs 2n nondegeneracy dichotomy.
RANK_TOL = 1e-8


@dataclass(frozen=True)
class HessianReport:
    rank: int
    smallest_singular_values: tuple[float, float, float]
    nondegenerate: bool


def _pair_blocks(masses_vec: np.ndarray, points: np.ndarray):
    """Per-pair 2x2 blocks m_i m_j (I/d^3 - 3 dd^T/d^5) and the distances."""
    diff = points[None, :, :] - points[:, None, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    n = points.shape[0]
    if n > 1:
        iu, ju = _triu(n)
        dmin = dist[iu, ju]
        k = int(np.argmin(dmin))
        if dmin[k] < COLLISION_TOL:
            raise CollisionError(int(iu[k]), int(ju[k]), float(dmin[k]))
    np.fill_diagonal(dist, np.inf)
    eye = np.eye(2)
    outer = np.einsum("ijk,ijl->ijkl", diff, diff)
    blocks = eye[None, None] / dist[:, :, None, None] ** 3 - 3.0 * outer / dist[
        :, :, None, None
    ] ** 5
    return blocks, dist


def _assemble(blocks_ij: np.ndarray) -> np.ndarray:
    """Pack (n, n, 2, 2) blocks with zero-sum rows into a (2n, 2n) matrix."""
    n = blocks_ij.shape[0]
    blocks = blocks_ij.copy()
    idx = np.arange(n)
    blocks[idx, idx] = -blocks_ij.sum(axis=1)
    return blocks.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)


def potential_hessian(masses, q) -> np.ndarray:
    """Second derivative D^2 U of the force function, (2n, 2n)."""
    m = masses.masses if isinstance(masses, MassSystem) else np.asarray(masses, float)
    points = as_points(q)
    blocks, _ = _pair_blocks(m, points)
    blocks = blocks * (m[:, None] * m[None, :])[:, :, None, None]
    return _assemble(blocks)


def _equilibrium_jacobian_from(m, sdiag, points, diff, dist, u) -> np.ndarray:
    """Jacobian from the shared geometry of core._equilibrium_parts."""
    n = points.shape[0]
    inv3 = dist**-3
    outer = np.einsum("ijk,ijl->ijkl", diff, diff)
    blocks = np.eye(2)[None, None] * inv3[:, :, None, None] - 3.0 * outer * (
        inv3 / (dist * dist)
    )[:, :, None, None]
    # d/dq_k of sum_j m_j (q_j - q_i)/d^3 weighs columns by m_k only.
    attract = _assemble(blocks * m[None, :, None, None])

    w = (m[:, None] * m[None, :]) * inv3
    grad_u = np.einsum("ij,ijk->ik", w, diff).reshape(-1)

    sq = (points * sdiag).reshape(-1)
    jac = attract + np.outer(sq, grad_u)
    idx = np.arange(2 * n)
    jac[idx, idx] += u * np.tile(sdiag, n)
    return jac


def equilibrium_jacobian(masses_vec: np.ndarray, S: ScaleMatrix, q) -> np.ndarray:
    """Exact Jacobian of core.equilibrium_residual for a mass vector."""
    from .core import _equilibrium_parts

    m = np.asarray(masses_vec, dtype=float)
    points = as_points(q)
    diff, dist, u = _equilibrium_parts(m, points)
    return _equilibrium_jacobian_from(m, S.diag, points, diff, dist, u)


def jacobian_n(masses: MassSystem, S: ScaleMatrix, q) -> np.ndarray:
    return equilibrium_jacobian(masses.masses, S, q)


def jacobian_n1(masses: MassSystem, S: ScaleMatrix, q, p) -> np.ndarray:
    """Jacobian of the (n+1)-body residual in all 2n+2 coordinates."""
    p = np.asarray(p, dtype=float).reshape(1, 2)
    coords = np.vstack([as_points(q), p])
    return equilibrium_jacobian(masses.with_small(), S, coords)


def jacobian_restricted(
    masses: MassSystem, S: ScaleMatrix, q, p, base_potential: float | None = None
) -> np.ndarray:
    """Derivative in p of the restricted gradient; also D^2_p of the
    effective potential."""
    m = masses.masses
    points = as_points(q)
    p = np.asarray(p, dtype=float).reshape(2)
    diff = points - p[None, :]
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    k = int(np.argmin(dist))
    if dist[k] < COLLISION_TOL:
        raise CollisionError(k, points.shape[0], float(dist[k]))
    u = potential(masses, q) if base_potential is None else base_potential
    outer = np.einsum("ik,il->ikl", diff, diff)
    terms = 3.0 * outer / dist[:, None, None] ** 5 - np.eye(2)[None] / dist[
        :, None, None
    ] ** 3
    return np.einsum("i,ikl->kl", m, terms) + u * np.diag(S.diag)


def _rank_report(matrix: np.ndarray, full_rank: int) -> HessianReport:
    sv = np.linalg.svd(matrix, compute_uv=False)
    rank = int(np.sum(sv > RANK_TOL * sv[0]))
    tail = tuple(float(s) for s in sv[-3:][::-1]) if sv.size >= 3 else tuple(sv[::-1])
    return HessianReport(rank, tail, rank == full_rank)


def hessian(masses, S: ScaleMatrix, q) -> tuple[np.ndarray, HessianReport]:
    """Constrained-energy Hessian D^2 U + U * diag(S) * diag(masses).

    The expected rank at a nondegenerate solution is 2n-1 in central mode
    (the rotation direction spans the kernel) and 2n otherwise.
    """
    m = masses.masses if isinstance(masses, MassSystem) else np.asarray(masses, float)
    points = as_points(q)
    n = points.shape[0]
    u = potential(m, points)
    h = potential_hessian(m, points)
    h[np.arange(2 * n), np.arange(2 * n)] += u * np.tile(S.diag, n) * np.repeat(m, 2)
    expected = 2 * n - 1 if S.is_central else 2 * n
    return h, _rank_report(h, expected)


def restricted_hessian(
    masses: MassSystem, S: ScaleMatrix, q, p
) -> tuple[np.ndarray, bool]:
    """2x2 second derivative of the restricted potential and a full-rank flag."""
    h = jacobian_restricted(masses, S, q, p)
    sv = np.linalg.svd(h, compute_uv=False)
    return h, bool(sv[-1] > RANK_TOL * sv[0])
