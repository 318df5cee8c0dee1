"""Stochastic multistart driver: samples to distinct-solution registry.

The driver walks a sample stream, filters out points too close to anything
already explored (the adaptive "typical distance"), runs the local solver on
the survivors, and keeps one representative per solution class.  It stops
after the plateau length passes with no new class, or when the sample budget
is exhausted.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field

import numpy as np

from .core import CollisionError, ScaleMatrix, center_of_mass, moment_of_inertia, potential
from .local_solver import LocalResult, LocalSolverSettings, minimize
from .problems import ResidualProblem
from .sampling import SamplerSpec, make_sampler
from .symmetry import distance_signature, symmetry_orbit_match

__all__ = [
    "MultistartSettings",
    "SolutionRecord",
    "SolutionRegistry",
    "is_start_point",
    "run",
]

# A converged point counts as a solution only below this objective value,
# i.e. a residual norm around 1e-10.
ACCEPT_OBJECTIVE = 1e-20
# Residual / normalization slack allowed when a record is re-verified.
VERIFY_RESIDUAL = 1e-10
VERIFY_NORMALIZATION = 1e-8
# Two restricted critical points closer than this are the same point.
EXACT_DUP_TOL = 1e-8

_PROGRESS_EVERY = 10_000


@dataclass(frozen=True)
class MultistartSettings:
    sample_count: int
    plateau: int | None = None  # samples without a new class before stopping
    sampler: SamplerSpec = SamplerSpec()
    dedup_tol: float = 1e-6
    typical_distance_init: float = 0.0  # 0 accepts everything until data arrives
    solver: LocalSolverSettings = LocalSolverSettings()
    batch_size: int = 4096

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be at least 1")
        if self.plateau is not None and self.plateau < 1:
            raise ValueError("plateau must be at least 1 when set")


@dataclass
class SolutionRecord:
    coords: np.ndarray  # post-processed flat coordinates
    objective: float
    residual_inf: float
    lam: float | None
    signature: np.ndarray
    sample_index: int
    iterations: int


class SolutionRegistry:
    """Distinct solutions under one of three equality notions.

    ``dedup`` is "cc" (permutations and the full orthogonal group), "bc"
    (permutations, half-turn, axis reflections) or "exact" (same point up to
    EXACT_DUP_TOL, used for restricted critical points where symmetric
    copies are kept on purpose).
    """

    def __init__(self, masses: np.ndarray, S: ScaleMatrix, dedup: str, tol: float):
        if dedup not in ("cc", "bc", "exact"):
            raise ValueError(f"unknown dedup mode {dedup!r}")
        self.masses = np.asarray(masses, dtype=float)
        self.scale = S
        self.dedup = dedup
        self.tol = tol
        self.records: list[SolutionRecord] = []

    def __len__(self) -> int:
        return len(self.records)

    def coordinates(self) -> np.ndarray:
        if not self.records:
            return np.empty((0, 0))
        return np.vstack([r.coords for r in self.records])

    def contains(self, coords: np.ndarray) -> bool:
        coords = np.asarray(coords, dtype=float).reshape(-1)
        if self.dedup == "exact":
            return any(
                np.max(np.abs(coords - r.coords)) <= EXACT_DUP_TOL
                for r in self.records
            )
        return any(
            symmetry_orbit_match(
                r.coords, coords, self.scale, self.tol, masses=self.masses
            )
            for r in self.records
        )


def _record_from(
    problem: ResidualProblem, candidate: LocalResult, sample_index: int
) -> SolutionRecord | None:
    """Post-process and re-verify a converged point; None when it fails."""
    coords = problem.postprocess(candidate.point)
    residual = problem.residual(coords)
    residual_inf = float(np.max(np.abs(residual)))
    if residual_inf >= VERIFY_RESIDUAL:
        return None
    lam = None
    if problem.normalizing:
        com = center_of_mass(problem.masses, coords)
        inertia = moment_of_inertia(problem.masses, problem.scale, coords)
        if np.linalg.norm(com) >= VERIFY_NORMALIZATION:
            return None
        if abs(inertia - 1.0) >= VERIFY_NORMALIZATION:
            return None
        lam = potential(problem.masses, coords) / inertia
        signature = distance_signature(coords)
    else:
        signature = np.empty(0)
    return SolutionRecord(
        coords=coords,
        objective=0.5 * float(residual @ residual),
        residual_inf=residual_inf,
        lam=lam,
        signature=signature,
        sample_index=sample_index,
        iterations=candidate.iterations,
    )


def register(
    registry: SolutionRegistry,
    candidate: LocalResult,
    problem: ResidualProblem,
    sample_index: int = 0,
) -> bool:
    """Insert a converged local result; False when rejected or duplicate."""
    if not candidate.converged or candidate.objective >= ACCEPT_OBJECTIVE:
        return False
    record = _record_from(problem, candidate, sample_index)
    if record is None or registry.contains(record.coords):
        return False
    registry.records.append(record)
    return True


def is_start_point(sample, minima, used_starts, typical_distance: float) -> bool:
    """A sample starts a search unless it sits within the typical distance
    of a registered minimum or of an already used start point."""
    if typical_distance <= 0.0:
        return True
    s = np.asarray(sample, dtype=float)
    for group in (minima, used_starts):
        if group is None or len(group) == 0:
            continue
        arr = np.asarray(group, dtype=float)
        d2 = np.sum((arr - s) ** 2, axis=1)
        if np.min(d2) < typical_distance**2:
            return False
    return True


class _PointSet:
    """Growable (count, dim) array with batch nearest-point queries."""

    def __init__(self, dim: int):
        self._buf = np.empty((64, dim))
        self._buf32 = np.empty((64, dim), dtype=np.float32)
        self.count = 0

    def add(self, point: np.ndarray):
        if self.count == self._buf.shape[0]:
            self._buf = np.vstack([self._buf, np.empty_like(self._buf)])
            self._buf32 = np.vstack([self._buf32, np.empty_like(self._buf32)])
        self._buf[self.count] = point
        self._buf32[self.count] = point
        self.count += 1

    def view(self) -> np.ndarray:
        return self._buf[: self.count]

    def nearest(self, batch: np.ndarray, chunk: int = 4096):
        """Distance to and index of the nearest stored point, per batch row.

        Distances are screened in single precision; the filter is a
        heuristic, so half-ulp ties are irrelevant.
        """
        b32 = batch.astype(np.float32)
        best = np.full(batch.shape[0], np.inf, dtype=np.float32)
        arg = np.zeros(batch.shape[0], dtype=np.int64)
        bsq = np.einsum("ij,ij->i", b32, b32)
        rows = np.arange(len(batch))
        for s in range(0, self.count, chunk):
            p = self._buf32[s : min(s + chunk, self.count)]
            d2 = bsq[:, None] - 2.0 * b32 @ p.T + np.einsum("ij,ij->i", p, p)[None, :]
            local = d2.argmin(axis=1)
            val = d2[rows, local]
            better = val < best
            best[better] = val[better]
            arg[better] = local[better] + s
        return np.sqrt(np.maximum(best, 0.0, dtype=np.float32)), arg


@dataclass
class RunDiagnostics:
    samples_seen: int = 0
    searches: int = 0
    failures: int = 0
    gradient_checks: int = 0
    typical_distance: float = 0.0
    plateau_fired: bool = False
    log: list[tuple[int, int, float]] = field(default_factory=list)


class _StartFilter:
    """Start-point selection with the adaptive typical distance.

    Samples within the typical distance of a registered minimum never start a
    search.  Near an already used start point, a sample is dropped only when
    the secant-gradient test says the two points sit in the same valley;
    plain distance rejection there starves small basins of searches.
    """

    def __init__(self, problem: ResidualProblem, init: float):
        self.problem = problem
        self.typical = init
        self.starts = _PointSet(problem.dimension)
        self.minima = _PointSet(problem.dimension)
        self._grads = _PointSet(problem.dimension)
        self._travel = 0.0
        self._min_sep = np.inf  # smallest distance between registered minima
        self.gradient_checks = 0

    @property
    def radius(self) -> float:
        """Rejection radius: the typical distance, capped at half the minimum
        separation of the known minima so that no exclusion ball can swallow
        a neighboring basin."""
        return min(self.typical, 0.5 * self._min_sep)

    def objective_gradient(self, x: np.ndarray) -> np.ndarray:
        r = self.problem.residual(x)
        return self.problem.jacobian(x).T @ r

    def batch_distances(self, batch: np.ndarray):
        n = len(batch)
        if self.minima.count:
            d_min, _ = self.minima.nearest(batch)
        else:
            d_min = np.full(n, np.inf)
        if self.starts.count:
            d_start, i_start = self.starts.nearest(batch)
        else:
            d_start, i_start = np.full(n, np.inf), np.zeros(n, dtype=np.int64)
        return d_min, d_start, i_start

    def should_start(self, sample, d_min: float, d_start: float, i_start: int) -> bool:
        radius = self.radius
        if radius <= 0.0:
            return True
        if d_min < radius:
            return False
        if d_start < radius:
            self.gradient_checks += 1
            try:
                g = self.objective_gradient(sample)
            except CollisionError:
                return False
            g_near = self._grads.view()[i_start]
            if np.all(np.isfinite(g_near)):
                secant = float((sample - self.starts.view()[i_start]) @ (g - g_near))
                if secant > 0.0:
                    return False
        return True

    def add_start(self, sample: np.ndarray, endpoint: np.ndarray, searches: int):
        self.starts.add(sample)
        try:
            self._grads.add(self.objective_gradient(sample))
        except CollisionError:
            self._grads.add(np.full(self.problem.dimension, np.nan))
        self._travel += float(np.linalg.norm(sample - endpoint))
        self.typical = self._travel / searches

    def add_minimum(self, coords: np.ndarray):
        if self.minima.count:
            d = np.linalg.norm(self.minima.view() - coords, axis=1)
            self._min_sep = min(self._min_sep, float(d.min()))
        self.minima.add(coords)


def run(
    problem: ResidualProblem,
    settings: MultistartSettings,
    dedup: str | None = None,
    threads: int = 1,
    progress=None,
) -> tuple[SolutionRegistry, RunDiagnostics]:
    """Algorithm-1 driver.  Single-threaded runs are bit-reproducible; with
    threads > 1 local searches of one batch run concurrently and insertions
    are committed in sample order."""
    if dedup is None:
        dedup = "cc" if problem.scale.is_central else "bc"
    registry = SolutionRegistry(problem.masses, problem.scale, dedup, settings.dedup_tol)
    diag = RunDiagnostics(typical_distance=settings.typical_distance_init)
    filt = _StartFilter(problem, settings.typical_distance_init)

    sampler = make_sampler(settings.sampler, problem.box)
    last_change = 0
    k = 0

    pool = (
        concurrent.futures.ThreadPoolExecutor(max_workers=threads)
        if threads > 1
        else None
    )

    def search(point):
        return minimize(
            problem.residual, problem.jacobian, problem.box, point, settings.solver
        )

    try:
        while k < settings.sample_count:
            batch = sampler.take(min(settings.batch_size, settings.sample_count - k))
            d_min, d_start, i_start = filt.batch_distances(batch)

            futures = None
            if pool is not None:
                launch_now = [
                    i
                    for i in range(len(batch))
                    if filt.should_start(batch[i], d_min[i], d_start[i], i_start[i])
                ]
                futures = {i: pool.submit(search, batch[i]) for i in launch_now}

            stop = False
            for i in range(len(batch)):
                k += 1
                if futures is not None:
                    result = futures[i].result() if i in futures else None
                else:
                    result = (
                        search(batch[i])
                        if filt.should_start(batch[i], d_min[i], d_start[i], i_start[i])
                        else None
                    )
                if result is not None:
                    diag.searches += 1
                    filt.add_start(batch[i], result.point, diag.searches)
                    if i + 1 < len(batch):
                        d = np.linalg.norm(batch[i + 1 :] - batch[i], axis=1)
                        closer = d < d_start[i + 1 :]
                        d_start[i + 1 :][closer] = d[closer]
                        i_start[i + 1 :][closer] = filt.starts.count - 1
                    diag.typical_distance = filt.typical
                    if result.converged:
                        if register(registry, result, problem, sample_index=k):
                            last_change = k
                            rec = registry.records[-1]
                            filt.add_minimum(rec.coords)
                            if i + 1 < len(batch):
                                d = np.linalg.norm(batch[i + 1 :] - rec.coords, axis=1)
                                np.minimum(d_min[i + 1 :], d, out=d_min[i + 1 :])
                    else:
                        diag.failures += 1
                if progress is not None and k % _PROGRESS_EVERY == 0:
                    progress(k, len(registry), diag.typical_distance)
                    diag.log.append((k, len(registry), diag.typical_distance))
                if settings.plateau is not None and k - last_change >= settings.plateau:
                    diag.plateau_fired = True
                    stop = True
                    break
            if stop:
                break
    finally:
        if pool is not None:
            pool.shutdown(wait=False, cancel_futures=True)

    diag.gradient_checks = filt.gradient_checks
    diag.samples_seen = k
    return registry, diag
