"""Distance signatures and symmetry-orbit tests for configurations.

Central-configuration solutions come in orbits under permutations of equal
masses and the full orthogonal group; balanced configurations only admit
permutations, the half-turn and the two axis reflections.  Deduplication
first compares sorted mutual-distance signatures (cheap, invariant) and only
then tries to align one configuration onto the other under the admissible
group.
"""

from __future__ import annotations

import numpy as np

from .core import ScaleMatrix, _triu, as_points

__all__ = [
    "distance_signature",
    "symmetry_orbit_match",
    "align_distance",
    "detect_reflection_axes",
    "BC_GROUP",
]

# Klein four-group acting on balanced configurations: identity, half-turn,
# reflection across x and across y.
BC_GROUP = (
    np.array([[1.0, 0.0], [0.0, 1.0]]),
    np.array([[-1.0, 0.0], [0.0, -1.0]]),
    np.array([[1.0, 0.0], [0.0, -1.0]]),
    np.array([[-1.0, 0.0], [0.0, 1.0]]),
)


def distance_signature(q) -> np.ndarray:
    """Sorted mutual distances; invariant under relabeling and rigid motions."""
    points = as_points(q)
    n = points.shape[0]
    iu, ju = _triu(n)
    d = np.sqrt(np.sum((points[ju] - points[iu]) ** 2, axis=1))
    return np.sort(d)


def _mass_groups(n: int, masses) -> np.ndarray:
    """Integer label per body; only bodies with equal labels may be permuted."""
    if masses is None:
        return np.zeros(n, dtype=int)
    m = np.asarray(masses, dtype=float)
    order = np.argsort(m, kind="stable")
    labels = np.empty(n, dtype=int)
    current = 0
    labels[order[0]] = 0
    for a, b in zip(order[:-1], order[1:]):
        if not np.isclose(m[a], m[b], rtol=1e-12, atol=0.0):
            current += 1
        labels[b] = current
    return labels


def _greedy_match_rms(a: np.ndarray, b: np.ndarray, groups: np.ndarray) -> float:
    """RMS point distance of a greedy nearest assignment b -> a.

    Bodies are only matched within their mass group.  Returns inf when some
    body cannot be matched.
    """
    n = a.shape[0]
    used = np.zeros(n, dtype=bool)
    total = 0.0
    for i in range(n):
        d2 = np.sum((b - a[i]) ** 2, axis=1)
        d2[used | (groups != groups[i])] = np.inf
        j = int(np.argmin(d2))
        if not np.isfinite(d2[j]):
            return np.inf
        used[j] = True
        total += d2[j]
    return float(np.sqrt(total / n))


def _rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def align_distance(q1, q2, S: ScaleMatrix, masses=None) -> float:
    """Best RMS point distance of q2 aligned onto q1 under the admissible group.

    Both configurations must be centered.  In central mode the rotation is
    searched over anchor pairs (a continuous group admits no finite
    enumeration); in balanced mode the four group elements are enumerated.
    """
    a = as_points(q1)
    b = as_points(q2)
    if a.shape != b.shape:
        return np.inf
    n = a.shape[0]
    groups = _mass_groups(n, masses)

    if not S.is_central:
        return min(_greedy_match_rms(a, b @ g.T, groups) for g in BC_GROUP)

    radii_a = np.linalg.norm(a, axis=1)
    anchor = int(np.argmax(radii_a))
    theta_a = np.arctan2(a[anchor, 1], a[anchor, 0])
    best = np.inf
    for reflect in (False, True):
        bb = b * np.array([1.0, -1.0]) if reflect else b
        radii_b = np.linalg.norm(bb, axis=1)
        for j in range(n):
            if groups[j] != groups[anchor]:
                continue
            if abs(radii_b[j] - radii_a[anchor]) > 0.5 * max(radii_a[anchor], 1e-12):
                continue
            rot = _rotation(theta_a - np.arctan2(bb[j, 1], bb[j, 0]))
            best = min(best, _greedy_match_rms(a, bb @ rot.T, groups))
    return best


def symmetry_orbit_match(q1, q2, S: ScaleMatrix, tolerance: float, masses=None) -> bool:
    """True iff q2 lies in the symmetry orbit of q1 at the given tolerance."""
    sig1 = distance_signature(q1)
    sig2 = distance_signature(q2)
    if sig1.size != sig2.size:
        return False
    if np.max(np.abs(sig1 - sig2)) > tolerance:
        return False
    return align_distance(q1, q2, S, masses) <= tolerance


def detect_reflection_axes(q, S: ScaleMatrix, masses=None, tol: float = 1e-8):
    """Reflection matrices (about lines through the origin) mapping q to itself.

    In balanced mode only the coordinate axes are eligible; in central mode
    candidate axis angles are taken through each body and each pair midline.
    """
    points = as_points(q)
    n = points.shape[0]
    groups = _mass_groups(n, masses)

    def reflection(angle: float) -> np.ndarray:
        c, s = np.cos(2 * angle), np.sin(2 * angle)
        return np.array([[c, s], [s, -c]])

    if S.is_central:
        angles = set()
        theta = np.arctan2(points[:, 1], points[:, 0])
        for i in range(n):
            angles.add(round(float(theta[i]) % np.pi, 12))
            for j in range(i + 1, n):
                angles.add(round(float((theta[i] + theta[j]) / 2) % np.pi, 12))
        candidates = [reflection(t) for t in sorted(angles)]
    else:
        candidates = [np.diag([1.0, -1.0]), np.diag([-1.0, 1.0])]

    found = []
    for mat in candidates:
        if _greedy_match_rms(points, points @ mat.T, groups) <= tol:
            if not any(np.allclose(mat, m, atol=1e-9) for m in found):
                found.append(mat)
    return found
