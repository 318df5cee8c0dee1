"""Run configuration: file parsing, validation, and solver-settings assembly.

Config files are flat ``key = value`` text with ``#`` comments; a file whose
first non-blank character is ``{`` is parsed as JSON instead.  Defaults
follow the standard experiment recipe: common mass 0.1, anisotropy (1, 0.3)
in balanced mode, relative refinement box 5e-2, and per-method sampling
plans (Faure for the n-body stage, pseudo-random for the restricted stage,
chaotic for the direct method).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

from .core import MassSystem, ScaleMatrix
from .continuation import ContinuationSettings
from .local_solver import LocalSolverSettings
from .multistart import MultistartSettings
from .sampling import SAMPLER_KINDS, SamplerSpec

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config"]

METHODS = ("continuation", "direct")
MODES = ("cc", "bc")

# method -> (sample count, plateau, sampler kind)
_METHOD_PLANS = {
    "nbody": (1_000_000, 200, "faure"),
    "direct": (9_000_000, 3000, "chaotic"),
}
RESTRICTED_SAMPLES = 50_000
DEFAULT_SIGMA_BC = (1.0, 0.3)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n: int
    mass: float = 0.1
    epsilon: float = 1e-8
    mode: str = "cc"
    sigma_x: float | None = None  # defaults depend on mode
    sigma_y: float | None = None
    method: str = "continuation"
    sampler: str | None = None  # defaults depend on method
    seed: int = 0
    skip: int = 0
    n_samples: int | None = None
    k_star: int | None = None
    delta: float = 5e-2
    restricted_samples: int = RESTRICTED_SAMPLES
    output_dir: str = "."
    threads: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if self.mass <= 0:
            raise ConfigError("mass must be positive")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be nonnegative")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.sampler is not None and self.sampler not in SAMPLER_KINDS:
            raise ConfigError(f"unknown sampler {self.sampler!r}")
        if not (0 < self.delta < 1):
            raise ConfigError("delta must lie in (0, 1)")
        if self.n_samples is not None and self.n_samples < 1:
            raise ConfigError("n_samples must be positive")
        if self.k_star is not None and self.k_star < 1:
            raise ConfigError("k_star must be positive")
        if self.restricted_samples < 1:
            raise ConfigError("restricted_samples must be positive")

        if self.sigma_x is None and self.sigma_y is None:
            self.sigma_x, self.sigma_y = (
                (1.0, 1.0) if self.mode == "cc" else DEFAULT_SIGMA_BC
            )
        if self.sigma_x is None or self.sigma_y is None:
            raise ConfigError("sigma_x and sigma_y must be given together")
        if self.sigma_x <= 0 or self.sigma_y <= 0:
            raise ConfigError("sigma_x and sigma_y must be positive")
        if self.mode == "cc" and self.sigma_x != self.sigma_y:
            raise ConfigError(
                "mode 'cc' requires sigma_x == sigma_y; "
                "use mode 'bc' for anisotropic scaling"
            )
        if self.mode == "bc" and self.sigma_x == self.sigma_y:
            raise ConfigError(
                "mode 'bc' requires sigma_x != sigma_y; "
                "use mode 'cc' for isotropic scaling"
            )

    # -- derived solver inputs ------------------------------------------------

    def mass_system(self, with_small: bool = False) -> MassSystem:
        small = self.epsilon * self.mass if with_small else 0.0
        return MassSystem.equal(self.n, self.mass, small)

    def scale_matrix(self) -> ScaleMatrix:
        return ScaleMatrix(self.sigma_x, self.sigma_y)

    def _plan(self, stage: str) -> tuple[int, int | None, str]:
        count, plateau, kind = _METHOD_PLANS[stage]
        return (
            self.n_samples if self.n_samples is not None else count,
            self.k_star if self.k_star is not None else plateau,
            self.sampler if self.sampler is not None else kind,
        )

    def multistart_settings(self, stage: str | None = None) -> MultistartSettings:
        stage = stage or ("direct" if self.method == "direct" else "nbody")
        count, plateau, kind = self._plan(stage)
        return MultistartSettings(
            sample_count=count,
            plateau=plateau,
            sampler=SamplerSpec(kind, seed=self.seed, skip=self.skip),
            solver=LocalSolverSettings(),
        )

    def continuation_settings(self) -> ContinuationSettings:
        return ContinuationSettings(
            n_body=self.multistart_settings("nbody"),
            epsilon=self.epsilon,
            delta=self.delta,
            restricted_sample_count=self.restricted_samples,
        )

    def echo(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_ALIASES = {"N_s": "n_samples", "ns": "n_samples", "kstar": "k_star"}
_INT_KEYS = {"n", "seed", "skip", "n_samples", "k_star", "restricted_samples", "threads"}
_FLOAT_KEYS = {"mass", "epsilon", "sigma_x", "sigma_y", "delta"}
_STR_KEYS = {"mode", "method", "sampler", "output_dir"}


def parse_config(text: str, **overrides) -> RunConfig:
    """Parse config text (key=value or JSON) into a validated RunConfig."""
    stripped = text.lstrip()
    values: dict = {}
    if stripped.startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("JSON config must be an object")
        values.update(raw)
    else:
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()

    values = {_ALIASES.get(k, k): v for k, v in values.items()}
    values.update({k: v for k, v in overrides.items() if v is not None})

    known = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    kwargs: dict = {}
    for key, value in values.items():
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            else:
                kwargs[key] = str(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    if "n" not in kwargs:
        raise ConfigError("config must set n (number of primary bodies)")
    return RunConfig(**kwargs)


def load_config(path: str, **overrides) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read(), **overrides)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
