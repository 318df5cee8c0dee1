"""Box-constrained nonlinear least-squares local search.

One deterministic trust-region Levenberg-Marquardt routine serves every
residual system in the package: the Gauss-Newton model step is damped until
it fits the trust radius, trial points are clipped to the box, and a step is
accepted only if it strictly decreases the objective F = 0.5 ||f||^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CollisionError
from .sampling import Box

__all__ = ["LocalSolverSettings", "LocalResult", "minimize"]


@dataclass(frozen=True)
class LocalSolverSettings:
    max_iterations: int = 500
    residual_tol: float = 1e-13  # stop when ||f||_inf drops below
    step_tol: float = 1e-15  # relative step size for the small-step exit
    trust_radius_init: float = 1.0
    stationarity_tol: float = 1e-8  # projected-gradient norm for small-step convergence

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        for name in ("residual_tol", "step_tol", "trust_radius_init", "stationarity_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class LocalResult:
    point: np.ndarray
    objective: float
    converged: bool
    iterations: int
    termination: str  # residual | small-step | max-iter | out-of-box
    residual_norms: list[float] = field(default_factory=list)


def _projected_gradient(g: np.ndarray, x: np.ndarray, box: Box) -> np.ndarray:
    pg = g.copy()
    at_lower = x <= box.lower + 1e-14 * np.maximum(1.0, np.abs(box.lower))
    at_upper = x >= box.upper - 1e-14 * np.maximum(1.0, np.abs(box.upper))
    pg[at_lower] = np.minimum(g[at_lower], 0.0)
    pg[at_upper] = np.maximum(g[at_upper], 0.0)
    return pg


def _norm(v: np.ndarray) -> float:
    return float(np.sqrt(v @ v))


def _damped_step(jtj: np.ndarray, g: np.ndarray, radius: float) -> np.ndarray:
    """Gauss-Newton step, Tikhonov-damped until it fits the trust radius."""
    n = jtj.shape[0]
    ridge = 1e-14 * max(1.0, float(np.trace(jtj)) / n)

    if n == 2:
        a, b, c, d = jtj[0, 0] + ridge, jtj[0, 1], jtj[1, 0], jtj[1, 1] + ridge

        def solve(mu: float) -> np.ndarray:
            det = (a + mu) * (d + mu) - b * c
            if det == 0.0:
                return np.linalg.lstsq(jtj + (ridge + mu) * np.eye(2), -g, rcond=None)[0]
            return np.array(
                [(-(d + mu) * g[0] + b * g[1]) / det, (c * g[0] - (a + mu) * g[1]) / det]
            )

    else:
        eye = np.eye(n)

        def solve(mu: float) -> np.ndarray:
            try:
                return np.linalg.solve(jtj + (ridge + mu) * eye, -g)
            except np.linalg.LinAlgError:
                return np.linalg.lstsq(jtj + (ridge + mu) * eye, -g, rcond=None)[0]

    h = solve(0.0)
    norm = _norm(h)
    if norm <= radius or norm == 0.0:
        return h
    # bracket the damping parameter, then bisect; ||h(mu)|| is decreasing
    lo, hi = 0.0, max(_norm(g) / radius, 1e-8)
    h = solve(hi)
    while _norm(h) > radius:
        lo, hi = hi, 4.0 * hi
        h = solve(hi)
        if hi > 1e20:
            return h * (radius / max(_norm(h), 1e-300))
    best = h
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        h = solve(mid)
        norm = _norm(h)
        if norm > radius:
            lo = mid
        else:
            hi = mid
            best = h
            if norm > 0.95 * radius:
                break
    return best


def minimize(residual, jacobian, box: Box, start, settings=None) -> LocalResult:
    """Run the local search from ``start``; every iterate stays in ``box``.

    ``residual`` and ``jacobian`` may raise CollisionError; a failing trial
    point is rejected and the trust radius shrinks.
    """
    cfg = settings or LocalSolverSettings()
    x = np.asarray(start, dtype=float).copy()
    if not box.contains(x):
        return LocalResult(x, np.inf, False, 0, "out-of-box")

    try:
        r = residual(x)
    except CollisionError:
        return LocalResult(x, np.inf, False, 0, "max-iter")
    f_val = 0.5 * float(r @ r)
    norms = [float(np.max(np.abs(r)))]
    radius = cfg.trust_radius_init
    max_radius = 2.0 * _norm(box.widths)

    jac = None
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        if norms[-1] < cfg.residual_tol:
            return LocalResult(x, f_val, True, iterations - 1, "residual", norms)
        if jac is None:
            try:
                jac = jacobian(x)
            except CollisionError:
                return LocalResult(x, f_val, False, iterations, "max-iter", norms)
            g = jac.T @ r
            jtj = jac.T @ jac

        h = _damped_step(jtj, g, radius)
        trial = box.clip(x + h)
        step = trial - x
        step_size = _norm(step)
        if step_size <= cfg.step_tol * (_norm(x) + cfg.step_tol):
            pg = _projected_gradient(g, x, box)
            stationary = float(np.max(np.abs(pg))) <= cfg.stationarity_tol
            return LocalResult(x, f_val, stationary, iterations, "small-step", norms)

        rejected = True
        try:
            r_trial = residual(trial)
            f_trial = 0.5 * float(r_trial @ r_trial)
            predicted = -(g @ step) - 0.5 * float(step @ (jtj @ step))
            if f_trial < f_val:
                rejected = False
                ratio = (f_val - f_trial) / predicted if predicted > 0 else 0.0
                x, r, f_val = trial, r_trial, f_trial
                norms.append(float(np.max(np.abs(r))))
                jac = None
                if ratio > 0.75 and step_size > 0.99 * radius:
                    radius = min(2.0 * radius, max_radius)
                elif ratio < 0.25:
                    radius = 0.25 * step_size
        except CollisionError:
            pass
        if rejected:
            radius = 0.25 * min(radius, step_size)

    return LocalResult(x, f_val, False, cfg.max_iterations, "max-iter", norms)
