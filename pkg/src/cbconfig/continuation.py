"""Three-step continuation pipeline for the (n+1)-body problem.

Step 1 computes every n-body solution, step 2 the critical points of the
massless particle around each of them, and step 3 turns each (base, point)
pair into a genuine (n+1)-body solution by a local solve in a small relative
box around the pair.  The pair is exact for a vanishing extra mass, so the
refinement displacement shrinks with the mass ratio.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import MassSystem, ScaleMatrix
from .local_solver import LocalResult, LocalSolverSettings, minimize
from .multistart import MultistartSettings, RunDiagnostics, SolutionRecord, run
from .problems import nbody_problem, refinement_problem, restricted_problem
from .sampling import SamplerSpec
from .symmetry import symmetry_orbit_match

__all__ = [
    "PipelineError",
    "ContinuationSettings",
    "RefinedSolution",
    "ContinuationTree",
    "step1_nbody",
    "step2_restricted",
    "build_tree",
    "step3_refine",
    "quotient_distinct",
]


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class ContinuationSettings:
    n_body: MultistartSettings
    epsilon: float = 1e-8  # small mass as a fraction of the common mass
    delta: float = 5e-2  # relative half-width of the refinement box
    restricted_sample_count: int = 50_000
    restricted_solver: LocalSolverSettings = LocalSolverSettings()

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")


@dataclass
class RefinedSolution:
    base_index: int  # k
    point_index: int  # l
    initial: np.ndarray  # 2n+2 initial guess, exact at zero extra mass
    coords: np.ndarray  # refined coordinates (equals initial when failed)
    converged: bool
    objective: float
    residual_inf: float
    delta_q0: float  # RMS per-body displacement from the initial guess


@dataclass
class ContinuationTree:
    masses: MassSystem
    scale: ScaleMatrix
    epsilon: float
    base_solutions: list[SolutionRecord]
    restricted_points: list[list[np.ndarray]]  # per base k
    refined: list[list[RefinedSolution]] = field(default_factory=list)
    diagnostics: RunDiagnostics | None = None

    @property
    def n_sol_base(self) -> int:
        return len(self.base_solutions)

    @property
    def restricted_counts(self) -> list[int]:
        return [len(points) for points in self.restricted_points]

    @property
    def n_sol_total(self) -> int:
        """Count identity: one (n+1)-body solution per (base, point) pair."""
        return sum(self.restricted_counts)

    def refined_list(self) -> list[RefinedSolution]:
        return [sol for group in self.refined for sol in group]


def step1_nbody(
    masses: MassSystem,
    S: ScaleMatrix,
    settings: MultistartSettings,
    threads: int = 1,
    progress=None,
) -> tuple[list[SolutionRecord], RunDiagnostics]:
    """All distinct n-body solutions, normalized and residual-verified."""
    problem = nbody_problem(masses, S)
    registry, diag = run(problem, settings, threads=threads, progress=progress)
    if not registry.records:
        raise PipelineError("no base solutions found for the n-body problem")
    return registry.records, diag


def _restricted_sampler(base_spec: SamplerSpec, k: int) -> SamplerSpec:
    """Independent pseudo-random stream per base solution."""
    state = np.random.SeedSequence([int(base_spec.seed), k]).generate_state(
        2, dtype=np.uint64
    )
    return SamplerSpec("pseudo-random", seed=(int(state[0]) << 64) | int(state[1]))


def step2_restricted(
    masses: MassSystem,
    S: ScaleMatrix,
    base_coords: np.ndarray,
    settings: ContinuationSettings,
    base_index: int = 0,
    base_seed_spec: SamplerSpec | None = None,
    threads: int = 1,
) -> list[np.ndarray]:
    """All critical points of the massless particle around one base solution.

    Symmetric copies are deliberately distinct here; only coinciding points
    are merged, so the per-base counts add up over the whole tree.
    """
    problem = restricted_problem(masses, S, base_coords)
    sampler = _restricted_sampler(base_seed_spec or settings.n_body.sampler, base_index)
    ms_settings = MultistartSettings(
        sample_count=settings.restricted_sample_count,
        plateau=None,
        sampler=sampler,
        dedup_tol=settings.n_body.dedup_tol,
        solver=settings.restricted_solver,
    )
    registry, _ = run(problem, ms_settings, dedup="exact", threads=threads)
    return [record.coords for record in registry.records]


def build_tree(
    masses: MassSystem,
    S: ScaleMatrix,
    settings: ContinuationSettings,
    threads: int = 1,
    progress=None,
) -> ContinuationTree:
    """Steps 1 and 2: the mass-independent part of the pipeline."""
    base, diag = step1_nbody(masses, S, settings.n_body, threads, progress)
    restricted = [
        step2_restricted(
            masses,
            S,
            record.coords,
            settings,
            base_index=k,
            threads=threads,
        )
        for k, record in enumerate(base)
    ]
    return ContinuationTree(
        masses=masses,
        scale=S,
        epsilon=0.0,
        base_solutions=base,
        restricted_points=restricted,
        diagnostics=diag,
    )


def _rms_displacement(refined: np.ndarray, initial: np.ndarray) -> float:
    d = (refined - initial).reshape(-1, 2)
    return float(np.sqrt(np.mean(np.sum(d**2, axis=1))))


def step3_refine(
    tree: ContinuationTree,
    epsilon: float,
    delta: float = 5e-2,
    solver: LocalSolverSettings | None = None,
) -> ContinuationTree:
    """Solve the full (n+1)-body problem near every (base, point) pair.

    With epsilon == 0 the initial guesses are already exact and are returned
    unchanged.  Failed refinements stay in the tree flagged unconverged.
    """
    solver = solver or LocalSolverSettings()
    mass_value = float(np.mean(tree.masses.masses))
    small = epsilon * mass_value
    masses = MassSystem(tree.masses.masses, small)

    refined: list[list[RefinedSolution]] = []
    for k, base in enumerate(tree.base_solutions):
        group: list[RefinedSolution] = []
        for l, point in enumerate(tree.restricted_points[k]):
            initial = np.concatenate([base.coords, point])
            if small == 0.0:
                group.append(
                    RefinedSolution(k, l, initial, initial.copy(), True, 0.0, 0.0, 0.0)
                )
                continue
            problem = refinement_problem(masses, tree.scale, initial, delta)
            result: LocalResult = minimize(
                problem.residual, problem.jacobian, problem.box, initial, solver
            )
            res_inf = (
                float(np.max(np.abs(problem.residual(result.point))))
                if np.isfinite(result.objective)
                else np.inf
            )
            ok = result.converged and result.objective < 1e-20
            coords = result.point if ok else initial.copy()
            group.append(
                RefinedSolution(
                    k,
                    l,
                    initial,
                    coords,
                    ok,
                    result.objective,
                    res_inf,
                    _rms_displacement(coords, initial) if ok else np.nan,
                )
            )
        refined.append(group)
    return replace(
        tree, epsilon=epsilon, refined=refined, masses=masses
    )


def quotient_distinct(tree: ContinuationTree, mode: str | None = None) -> int:
    """Number of symmetry classes among the refined (n+1)-body solutions."""
    if not tree.refined:
        raise PipelineError("tree has no refined solutions; run step3 first")
    if mode is None:
        mode = "cc" if tree.scale.is_central else "bc"
    masses = tree.masses.with_small()
    tol = 1e-6
    reps: list[np.ndarray] = []
    for sol in tree.refined_list():
        if not sol.converged:
            continue
        if not any(
            symmetry_orbit_match(rep, sol.coords, tree.scale, tol, masses=masses)
            for rep in reps
        ):
            reps.append(sol.coords)
    return len(reps)
