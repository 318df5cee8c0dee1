"""JSON solution documents: a fixed schema with lossless round-trips.

Top-level keys are "config", "solutions" and "aggregates".  Coordinates are
arrays of [x, y] pairs serialized at full double precision, so parsing a
serialized document reproduces it exactly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

__all__ = ["DocumentError", "SolutionEntry", "SolutionDocument", "serialize", "parse"]

SCHEMA_KEYS = ("config", "solutions", "aggregates")
ENTRY_KINDS = ("base", "restricted", "refined", "direct")


class DocumentError(ValueError):
    """Schema violation, carrying the path of the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class SolutionEntry:
    kind: str  # base | restricted | refined | direct
    index: list[int]  # [k] / [k, l] / [m]
    coordinates: list[list[float]]  # [[x, y], ...]
    residual_inf: float
    lam: float | None = None
    delta_q0: float | None = None  # refined entries
    delta_R: float | None = None  # direct entries, set by compare
    match_index: list[int] | None = None  # [k0, l0] for direct entries
    verification: dict | None = None


@dataclass
class SolutionDocument:
    config: dict
    solutions: list[SolutionEntry]
    aggregates: dict = field(default_factory=dict)

    def entries(self, kind: str) -> list[SolutionEntry]:
        return [e for e in self.solutions if e.kind == kind]


def serialize(doc: SolutionDocument) -> bytes:
    payload = {
        "config": doc.config,
        "solutions": [asdict(entry) for entry in doc.solutions],
        "aggregates": doc.aggregates,
    }
    return json.dumps(payload, indent=1).encode("utf-8")


def _need(mapping, key, path, kinds, kind_name):
    if not isinstance(mapping, dict):
        raise DocumentError(path, f"expected an object, got {type(mapping).__name__}")
    if key not in mapping:
        raise DocumentError(f"{path}.{key}" if path else key, "missing required field")
    value = mapping[key]
    if not isinstance(value, kinds):
        raise DocumentError(
            f"{path}.{key}" if path else key,
            f"expected {kind_name}, got {type(value).__name__}",
        )
    return value


def _coords(value, path) -> list[list[float]]:
    if not isinstance(value, list) or not value:
        raise DocumentError(path, "expected a nonempty array of [x, y] pairs")
    out = []
    for i, pair in enumerate(value):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in pair)
        ):
            raise DocumentError(f"{path}[{i}]", "expected an [x, y] number pair")
        out.append([float(pair[0]), float(pair[1])])
    return out


def _entry(raw, path) -> SolutionEntry:
    kind = _need(raw, "kind", path, str, "a string")
    if kind not in ENTRY_KINDS:
        raise DocumentError(f"{path}.kind", f"unknown solution kind {kind!r}")
    index = _need(raw, "index", path, list, "an array")
    if not all(isinstance(i, int) and not isinstance(i, bool) for i in index):
        raise DocumentError(f"{path}.index", "expected integer indices")
    coordinates = _coords(_need(raw, "coordinates", path, list, "an array"), f"{path}.coordinates")
    residual_inf = _need(raw, "residual_inf", path, (int, float), "a number")

    def optional(key, kinds, name):
        value = raw.get(key)
        if value is not None and not isinstance(value, kinds):
            raise DocumentError(f"{path}.{key}", f"expected {name} or null")
        return value

    lam = optional("lam", (int, float), "a number")
    dq0 = optional("delta_q0", (int, float), "a number")
    dR = optional("delta_R", (int, float), "a number")
    match_index = optional("match_index", list, "an array")
    verification = optional("verification", dict, "an object")
    return SolutionEntry(
        kind=kind,
        index=[int(i) for i in index],
        coordinates=coordinates,
        residual_inf=float(residual_inf),
        lam=None if lam is None else float(lam),
        delta_q0=None if dq0 is None else float(dq0),
        delta_R=None if dR is None else float(dR),
        match_index=None if match_index is None else [int(i) for i in match_index],
        verification=verification,
    )


def parse(data: bytes | str) -> SolutionDocument:
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise DocumentError("$", f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise DocumentError("$", "top level must be an object")
    for key in SCHEMA_KEYS:
        if key not in raw:
            raise DocumentError(key, "missing required field")
    config = _need(raw, "config", "", dict, "an object")
    solutions_raw = _need(raw, "solutions", "", list, "an array")
    aggregates = _need(raw, "aggregates", "", dict, "an object")
    solutions = [
        _entry(entry, f"solutions[{i}]") for i, entry in enumerate(solutions_raw)
    ]
    return SolutionDocument(config=config, solutions=solutions, aggregates=aggregates)
