"""Solution verification and the RMS comparison metrics.

Verification always recomputes from the coordinates, never trusts solver
state.  The comparison metrics match each directly-found solution to its
nearest continuation solution by sorted mutual distances and report RMS
deviations in coordinates and in distances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    CollisionError,
    MassSystem,
    ScaleMatrix,
    as_points,
    center_of_mass,
    equilibrium_residual,
    moment_of_inertia,
    potential,
)
from .continuation import ContinuationTree, PipelineError
from .derivatives import HessianReport, hessian
from .symmetry import distance_signature

__all__ = [
    "VerificationReport",
    "ComparisonReport",
    "MatchEntry",
    "verify",
    "delta_q0",
    "match_and_delta_R",
]


@dataclass(frozen=True)
class VerificationReport:
    residual_inf: float
    com_norm: float
    inertia_dev: float  # |I_S - 1|
    lam: float
    hessian: HessianReport | None
    collision: bool = False

    def passed(
        self, residual_tol: float = 1e-10, normalization_tol: float = 1e-8
    ) -> bool:
        return (
            not self.collision
            and self.residual_inf < residual_tol
            and self.com_norm < normalization_tol
            and self.inertia_dev < normalization_tol
        )


@dataclass(frozen=True)
class MatchEntry:
    direct_index: int
    base_index: int  # k0
    point_index: int  # l0
    delta_R: float


@dataclass(frozen=True)
class ComparisonReport:
    matches: list[MatchEntry]
    delta_R: float
    delta_q0: float
    counts_equal: bool
    n_direct: int
    n_distinct: int


def verify(masses, S: ScaleMatrix, q, mode: str | None = None) -> VerificationReport:
    """Recompute residual, normalization residuals, multiplier and rank.

    A collision is reported as a failed verification rather than raised.
    """
    if mode is not None and mode not in ("cc", "bc"):
        raise ValueError("mode must be 'cc' or 'bc'")
    n_bodies = as_points(q).shape[0]
    if isinstance(masses, MassSystem):
        m = masses.masses if n_bodies == masses.n else masses.with_small()
    else:
        m = np.asarray(masses, dtype=float)
    try:
        res = equilibrium_residual(m, S, q)
        com = center_of_mass(m, q)
        inertia = moment_of_inertia(m, S, q)
        lam = potential(m, q) / inertia
        _, report = hessian(m, S, q)
    except CollisionError:
        return VerificationReport(np.inf, np.inf, np.inf, np.nan, None, collision=True)
    return VerificationReport(
        residual_inf=float(np.max(np.abs(res))),
        com_norm=float(np.linalg.norm(com)),
        inertia_dev=abs(inertia - 1.0),
        lam=lam,
        hessian=report,
        collision=False,
    )


def delta_q0(tree: ContinuationTree) -> tuple[list[list[float]], float]:
    """Per-pair RMS displacements and their two-level aggregate.

    The aggregate averages the squared per-pair values over the points of
    each base solution first, then over the base solutions.
    """
    if not tree.refined:
        raise PipelineError("tree has no refined solutions; run step3 first")
    per_kl: list[list[float]] = []
    outer = []
    for group in tree.refined:
        values = [sol.delta_q0 for sol in group if sol.converged]
        per_kl.append([sol.delta_q0 for sol in group])
        if values:
            outer.append(np.mean(np.square(values)))
    if not outer:
        raise PipelineError("no converged refinements to aggregate")
    return per_kl, float(np.sqrt(np.mean(outer)))


def _signature_all(coords: np.ndarray) -> np.ndarray:
    return distance_signature(coords)


def _signature_primaries(coords: np.ndarray) -> np.ndarray:
    pts = as_points(coords)
    return distance_signature(pts[:-1])


def match_and_delta_R(
    direct_coords: list[np.ndarray],
    tree: ContinuationTree,
    pairs: str = "all",
) -> ComparisonReport:
    """Match direct solutions to continuation solutions by sorted distances.

    ``pairs`` selects which mutual distances enter both the matching sum and
    the RMS: "all" uses every pair of the n+1 bodies, "primaries" only the
    pairs among the first n.  The RMS divisor is the number of distances
    used.
    """
    if pairs not in ("all", "primaries"):
        raise ValueError("pairs must be 'all' or 'primaries'")
    if not direct_coords:
        raise ValueError("no direct solutions to match")
    refined = tree.refined_list()
    converged = [sol for sol in refined if sol.converged]
    if not converged:
        raise PipelineError("tree has no converged refined solutions")

    signature = _signature_all if pairs == "all" else _signature_primaries
    cont_sigs = [signature(sol.coords) for sol in converged]
    n_dist = cont_sigs[0].size

    matches: list[MatchEntry] = []
    for m_idx, coords in enumerate(direct_coords):
        sig = signature(coords)
        if sig.size != n_dist:
            raise ValueError(
                f"distance lists differ in size: direct solution {m_idx} has "
                f"{sig.size}, continuation has {n_dist}"
            )
        ss = [float(np.sum((sig - cs) ** 2)) for cs in cont_sigs]
        best = int(np.argmin(ss))
        matches.append(
            MatchEntry(
                direct_index=m_idx,
                base_index=converged[best].base_index,
                point_index=converged[best].point_index,
                delta_R=float(np.sqrt(ss[best] / n_dist)),
            )
        )

    agg_R = float(np.sqrt(np.mean([m.delta_R**2 for m in matches])))
    _, agg_q0 = delta_q0(tree)
    from .continuation import quotient_distinct

    n_distinct = quotient_distinct(tree)
    return ComparisonReport(
        matches=matches,
        delta_R=agg_R,
        delta_q0=agg_q0,
        counts_equal=n_distinct == len(direct_coords),
        n_direct=len(direct_coords),
        n_distinct=n_distinct,
    )
