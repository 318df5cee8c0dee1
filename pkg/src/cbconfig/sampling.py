"""Sample-point generators for the multistart engine.

All samplers draw from the unit cube and map affinely onto the target box.
A sampler instance is a stateful stream: repeated ``take`` calls continue
the sequence, and two instances built from the same spec produce identical
output.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Box",
    "SamplerSpec",
    "Sampler",
    "SAMPLER_KINDS",
    "make_sampler",
    "sample",
    "discrepancy_estimate",
]

SAMPLER_KINDS = (
    "pseudo-random",
    "halton",
    "sobol",
    "faure",
    "latin-hypercube",
    "chaotic",
)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, the search domain of one solve."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be 1-d and equally sized")
        if not np.all(lo < hi):
            raise ValueError("box must satisfy lower < upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x, rtol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        pad = rtol * np.maximum(1.0, np.abs(self.widths))
        return bool(
            np.all(x >= self.lower - pad) and np.all(x <= self.upper + pad)
        )

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def map_unit(self, u: np.ndarray) -> np.ndarray:
        return self.lower + u * self.widths


@dataclass(frozen=True)
class SamplerSpec:
    kind: str = "pseudo-random"
    seed: int = 0
    skip: int = 0

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ValueError(
                f"unsupported sampler kind {self.kind!r}; "
                f"expected one of {', '.join(SAMPLER_KINDS)}"
            )
        if self.skip < 0:
            raise ValueError("skip must be nonnegative")


class Sampler:
    """Base stream: subclasses fill the unit cube, the box mapping is shared."""

    def __init__(self, spec: SamplerSpec, box: Box):
        self.spec = spec
        self.box = box

    def take(self, count: int) -> np.ndarray:
        if count < 1:
            raise ValueError("count must be positive")
        u = self._unit(count)
        return self.box.map_unit(u)

    def _unit(self, count: int) -> np.ndarray:
        raise NotImplementedError


class _PseudoRandom(Sampler):
    def __init__(self, spec, box):
        super().__init__(spec, box)
        # Philox: counter-based, cheap to seed, streams are splittable.
        self._rng = np.random.Generator(np.random.Philox(key=spec.seed))
        if spec.skip:
            self._rng.random((spec.skip, box.dimension))

    def _unit(self, count):
        return self._rng.random((count, self.box.dimension))


class _LatinHypercube(Sampler):
    """Stratified per call: each ``take`` is one Latin hypercube design."""

    def __init__(self, spec, box):
        super().__init__(spec, box)
        self._rng = np.random.Generator(np.random.Philox(key=spec.seed))

    def _unit(self, count):
        dim = self.box.dimension
        u = np.empty((count, dim))
        for d in range(dim):
            perm = self._rng.permutation(count)
            u[:, d] = (perm + self._rng.random(count)) / count
        return u


def _primes(count: int) -> list[int]:
    primes: list[int] = []
    candidate = 2
    while len(primes) < count:
        if all(candidate % p for p in primes if p * p <= candidate):
            primes.append(candidate)
        candidate += 1
    return primes


def _radical_inverse(indices: np.ndarray, base: int) -> np.ndarray:
    x = np.zeros(indices.shape, dtype=float)
    f = 1.0 / base
    idx = indices.copy()
    while np.any(idx > 0):
        x += (idx % base) * f
        idx //= base
        f /= base
    return x


class _Halton(Sampler):
    def __init__(self, spec, box):
        super().__init__(spec, box)
        self._bases = _primes(box.dimension)
        self._next = 1 + spec.skip  # index 0 is the box corner, never emitted

    def _unit(self, count):
        idx = np.arange(self._next, self._next + count, dtype=np.int64)
        self._next += count
        return np.column_stack([_radical_inverse(idx, b) for b in self._bases])


def _load_sobol_directions(dim: int) -> list[tuple[int, int, list[int]]]:
    text = (
        importlib.resources.files("cbconfig")
        .joinpath("data/sobol_directions.txt")
        .read_text()
    )
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [int(tok) for tok in line.split()]
        rows.append((parts[1], parts[2], parts[3:]))
    if dim - 1 > len(rows):
        raise ValueError(f"sobol directions available for at most {len(rows) + 1} dimensions")
    return rows[: dim - 1]


_SOBOL_BITS = 32


class _Sobol(Sampler):
    def __init__(self, spec, box):
        super().__init__(spec, box)
        dim = box.dimension
        v = np.zeros((dim, _SOBOL_BITS), dtype=np.uint64)
        v[0] = [1 << (_SOBOL_BITS - k) for k in range(1, _SOBOL_BITS + 1)]
        for d, (s, a, m) in enumerate(_load_sobol_directions(dim), start=1):
            vk = [mm << (_SOBOL_BITS - k) for k, mm in enumerate(m, start=1)]
            for k in range(s, _SOBOL_BITS):
                new = vk[k - s] ^ (vk[k - s] >> s)
                for i in range(1, s):
                    if (a >> (s - 1 - i)) & 1:
                        new ^= vk[k - i]
                vk.append(new)
            v[d] = vk
        self._v = v
        self._next = 1 + spec.skip

    def _unit(self, count):
        idx = np.arange(self._next, self._next + count, dtype=np.uint64)
        self._next += count
        gray = idx ^ (idx >> np.uint64(1))
        acc = np.zeros((count, self.box.dimension), dtype=np.uint64)
        for bit in range(_SOBOL_BITS):
            on = ((gray >> np.uint64(bit)) & np.uint64(1)).astype(bool)
            if np.any(on):
                acc[on] ^= self._v[:, bit][None, :]
        return acc.astype(float) / float(1 << _SOBOL_BITS)


class _Faure(Sampler):
    """Faure sequence in the smallest prime base >= dimension.

    Dimension j applies the j-th power of the Pascal matrix (mod base) to the
    base-b digits of the index; the first base^4 points are always dropped to
    avoid startup correlation.
    """

    def __init__(self, spec, box):
        super().__init__(spec, box)
        dim = box.dimension
        base = 2
        while not all(base % p for p in range(2, int(base**0.5) + 1)) or base < dim:
            base += 1
        self._base = base
        self._next = 1 + base**4 + spec.skip
        self._powers: list[np.ndarray] = []

    def _pascal_powers(self, digits: int) -> list[np.ndarray]:
        if self._powers and self._powers[0].shape[0] >= digits:
            return [p[:digits, :digits] for p in self._powers]
        b = self._base
        pascal = np.zeros((digits, digits), dtype=np.int64)
        for m in range(digits):
            pascal[0, m] = 1
            for i in range(1, m + 1):
                pascal[i, m] = (pascal[i - 1, m - 1] + pascal[i, m - 1]) % b
        powers = [np.eye(digits, dtype=np.int64)]
        for _ in range(1, self.box.dimension):
            powers.append((powers[-1] @ pascal) % b)
        self._powers = powers
        return powers

    def _unit(self, count):
        b = self._base
        last = self._next + count - 1
        ndig = max(1, int(np.ceil(np.log(last + 1) / np.log(b))) + 1)
        powers = self._pascal_powers(ndig)
        idx = np.arange(self._next, self._next + count, dtype=np.int64)
        self._next += count
        digits = np.empty((ndig, count), dtype=np.int64)
        rem = idx.copy()
        for i in range(ndig):
            digits[i] = rem % b
            rem //= b
        weights = (1.0 / b) ** np.arange(1, ndig + 1)
        u = np.empty((count, self.box.dimension))
        for j in range(self.box.dimension):
            y = (powers[j] @ digits) % b
            u[:, j] = weights @ y
        return u


class _Chaotic(Sampler):
    """Logistic map x <- 4x(1-x) per dimension with arcsine unskewing."""

    _BURN_IN = 100

    def __init__(self, spec, box):
        super().__init__(spec, box)
        rng = np.random.Generator(np.random.Philox(key=spec.seed))
        self._x = rng.uniform(0.05, 0.95, size=box.dimension)
        steps = self._BURN_IN + spec.skip
        for _ in range(steps):
            self._x = 4.0 * self._x * (1.0 - self._x)

    def _unit(self, count):
        u = np.empty((count, self.box.dimension))
        x = self._x
        for k in range(count):
            x = 4.0 * x * (1.0 - x)
            u[k] = x
        self._x = x
        # the raw map has an arcsine invariant density; flatten it
        return (2.0 / np.pi) * np.arcsin(np.sqrt(np.clip(u, 0.0, 1.0)))


_FACTORIES = {
    "pseudo-random": _PseudoRandom,
    "halton": _Halton,
    "sobol": _Sobol,
    "faure": _Faure,
    "latin-hypercube": _LatinHypercube,
    "chaotic": _Chaotic,
}


def make_sampler(spec: SamplerSpec, box: Box) -> Sampler:
    return _FACTORIES[spec.kind](spec, box)


def sample(box: Box, count: int, spec: SamplerSpec) -> np.ndarray:
    """Generate ``count`` points of the sequence named by ``spec`` in ``box``."""
    return make_sampler(spec, box).take(count)


def discrepancy_estimate(points, box: Box, max_corners: int = 4096) -> float:
    """Star-discrepancy upper estimate by an axis-aligned box scan.

    Boxes are anchored at the lower box corner with upper corners taken at
    the sample points themselves (plus the box corner); each corner is
    checked with the points on its boundary both included and excluded,
    which brackets the supremum over nearby boxes.  The scanned corner set
    is capped at ``max_corners`` points for very large samples.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two points")
    unit = (pts - box.lower) / box.widths
    n = unit.shape[0]
    take = np.linspace(0, n - 1, min(n, max_corners)).astype(int)
    corners = np.vstack([unit[take], np.ones(box.dimension)])

    eps = 1e-12
    best = 0.0
    for chunk in range(0, len(corners), 128):
        c = corners[chunk : chunk + 128]
        closed = np.sum(np.all(unit[None, :, :] <= c[:, None, :] + eps, axis=2), axis=1)
        open_ = np.sum(np.all(unit[None, :, :] < c[:, None, :] - eps, axis=2), axis=1)
        vol = np.prod(c, axis=1)
        best = max(best, float(np.max(closed / n - vol)), float(np.max(vol - open_ / n)))
    return best
