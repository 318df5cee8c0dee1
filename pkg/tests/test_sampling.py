import numpy as np
import pytest

from cbconfig.sampling import (
    Box,
    SamplerSpec,
    discrepancy_estimate,
    make_sampler,
    sample,
)

UNIT1 = Box([0.0], [1.0])
UNIT2 = Box([0.0, 0.0], [1.0, 1.0])


def test_box_validation():
    with pytest.raises(ValueError):
        Box([0.0, 1.0], [1.0, 1.0])


def test_unsupported_kind_is_config_error():
    with pytest.raises(ValueError, match="unsupported sampler kind"):
        SamplerSpec("voronoi")


def test_halton_first_points_base2():
    pts = sample(UNIT1, 3, SamplerSpec("halton"))
    assert np.allclose(pts.ravel(), [0.5, 0.25, 0.75])


@pytest.mark.parametrize("kind", ["pseudo-random", "halton", "sobol", "faure", "latin-hypercube", "chaotic"])
def test_range_contract(kind):
    box = Box([-2.0, -2.0, -2.0], [3.0, 3.0, 3.0])
    pts = sample(box, 500, SamplerSpec(kind, seed=11))
    assert pts.shape == (500, 3)
    assert np.all(pts >= -2.0) and np.all(pts <= 3.0)


@pytest.mark.parametrize("kind", ["pseudo-random", "halton", "sobol", "faure", "latin-hypercube", "chaotic"])
def test_determinism(kind):
    spec = SamplerSpec(kind, seed=42, skip=5)
    a = sample(UNIT2, 64, spec)
    b = sample(UNIT2, 64, spec)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("kind", ["halton", "sobol", "faure"])
def test_streaming_continues_the_sequence(kind):
    spec = SamplerSpec(kind, seed=0)
    s = make_sampler(spec, UNIT2)
    chunks = np.vstack([s.take(7), s.take(13)])
    assert np.array_equal(chunks, sample(UNIT2, 20, spec))


def test_latin_hypercube_strata():
    pts = sample(UNIT2, 10, SamplerSpec("latin-hypercube", seed=3))
    for axis in range(2):
        strata = np.floor(pts[:, axis] * 10).astype(int)
        assert sorted(strata) == list(range(10))


def test_sobol_matches_scipy_reference():
    qmc = pytest.importorskip("scipy.stats.qmc")
    for dim in (2, 8, 16):
        box = Box(np.zeros(dim), np.ones(dim))
        ours = sample(box, 127, SamplerSpec("sobol"))
        ref = qmc.Sobol(dim, scramble=False).random(128)[1:]
        assert np.array_equal(ours, ref)


def test_chaotic_mean_near_half():
    pts = sample(Box(np.zeros(3), np.ones(3)), 10_000, SamplerSpec("chaotic", seed=9))
    means = pts.mean(axis=0)
    assert np.all(means > 0.3) and np.all(means < 0.7)


def brute_force_scan(points: np.ndarray) -> float:
    """Direct per-corner scan of origin-anchored boxes (test oracle)."""
    corners = np.vstack([points, np.ones(points.shape[1])])
    n = len(points)
    best = 0.0
    for hi in corners:
        vol = float(np.prod(hi))
        closed = sum(bool(np.all(p <= hi + 1e-12)) for p in points)
        opened = sum(bool(np.all(p < hi - 1e-12)) for p in points)
        best = max(best, closed / n - vol, vol - opened / n)
    return best


def test_discrepancy_matches_direct_scan_oracle():
    rng = np.random.default_rng(17)
    pts = rng.random((24, 2))
    assert discrepancy_estimate(pts, UNIT2) == pytest.approx(brute_force_scan(pts))


def test_discrepancy_stratum_grid():
    grid = np.array([(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)])
    est = discrepancy_estimate(grid, UNIT2)
    assert est <= 0.5
    assert est == pytest.approx(brute_force_scan(grid))


def test_discrepancy_degenerate_cluster():
    # all points coincide at the box corner: the sample spans nothing
    pts = np.tile([0.0, 0.0], (10, 1))
    assert discrepancy_estimate(pts, UNIT2) >= 1 - 1 / 10


def test_sobol_beats_pseudo_random():
    sobol = discrepancy_estimate(sample(UNIT2, 1024, SamplerSpec("sobol")), UNIT2)
    rand = np.median(
        [
            discrepancy_estimate(
                sample(UNIT2, 1024, SamplerSpec("pseudo-random", seed=s)), UNIT2
            )
            for s in range(10)
        ]
    )
    assert sobol < rand


def test_faure_base_is_smallest_prime_at_least_dimension():
    s = make_sampler(SamplerSpec("faure"), Box(np.zeros(8), np.ones(8)))
    assert s._base == 11
    s = make_sampler(SamplerSpec("faure"), Box(np.zeros(7), np.ones(7)))
    assert s._base == 7
