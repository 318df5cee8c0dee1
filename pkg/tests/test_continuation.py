import numpy as np
import pytest

from cbconfig import (
    ContinuationSettings,
    MassSystem,
    MultistartSettings,
    PipelineError,
    SamplerSpec,
    ScaleMatrix,
    build_tree,
    quotient_distinct,
    step2_restricted,
    step3_refine,
)
from cbconfig.problems import refinement_box


def two_body_settings(seed=1):
    return ContinuationSettings(
        n_body=MultistartSettings(
            sample_count=50_000, plateau=200, sampler=SamplerSpec("faure", seed=seed)
        ),
        restricted_sample_count=20_000,
    )


@pytest.fixture(scope="module")
def two_body_tree():
    ms = MassSystem.equal(2, 0.1)
    return build_tree(ms, ScaleMatrix(), two_body_settings())


class TestStepOneAndTwo:
    def test_single_base_solution(self, two_body_tree):
        assert two_body_tree.n_sol_base == 1
        base = two_body_tree.base_solutions[0]
        assert base.residual_inf < 1e-13

    def test_five_restricted_points(self, two_body_tree):
        assert two_body_tree.restricted_counts == [5]

    def test_triangular_points_at_closed_form(self, two_body_tree):
        pts = np.array(two_body_tree.restricted_points[0])
        off_axis = pts[np.abs(pts[:, 1]) > 1.0]
        assert len(off_axis) == 2
        # the base orbit is rotated arbitrarily, so compare radii
        assert np.allclose(np.linalg.norm(off_axis, axis=1), np.sqrt(15.0), atol=1e-8)

    def test_restricted_points_verified(self, two_body_tree):
        from cbconfig import restricted_gradient

        ms = MassSystem.equal(2, 0.1)
        base = two_body_tree.base_solutions[0].coords
        for p in two_body_tree.restricted_points[0]:
            g = restricted_gradient(ms, ScaleMatrix(), base, p)
            assert np.max(np.abs(g)) < 1e-10

    def test_deterministic(self, two_body_tree):
        again = build_tree(MassSystem.equal(2, 0.1), ScaleMatrix(), two_body_settings())
        assert np.array_equal(
            again.base_solutions[0].coords, two_body_tree.base_solutions[0].coords
        )
        assert np.array_equal(
            np.array(again.restricted_points[0]),
            np.array(two_body_tree.restricted_points[0]),
        )


class TestStepThree:
    def test_zero_mass_returns_guesses(self, two_body_tree):
        refined = step3_refine(two_body_tree, 0.0)
        for sol in refined.refined_list():
            assert sol.converged
            assert sol.delta_q0 == 0.0
            assert np.array_equal(sol.coords, sol.initial)

    def test_small_mass_refines_inside_box(self, two_body_tree):
        refined = step3_refine(two_body_tree, 1e-8, delta=5e-2)
        assert refined.n_sol_total == 5
        for sol in refined.refined_list():
            assert sol.converged
            assert sol.objective < 1e-20
            box = refinement_box(sol.initial, 5e-2)
            assert box.contains(sol.coords)
            # the midpoint pair is exactly mass-insensitive, so zero is valid
            assert 0 <= sol.delta_q0 < 1e-6

    def test_sum_identity(self, two_body_tree):
        refined = step3_refine(two_body_tree, 1e-8)
        assert refined.n_sol_total == sum(refined.restricted_counts)
        assert len(refined.refined_list()) == refined.n_sol_total

    def test_deviation_shrinks_with_mass(self, two_body_tree):
        values = []
        for eps in (1e-8, 1e-9, 1e-10):
            refined = step3_refine(two_body_tree, eps)
            values.append(max(s.delta_q0 for s in refined.refined_list()))
        assert values[0] > values[1] > values[2]
        assert 3 <= values[0] / values[1] <= 30

    def test_quotient_distinct_two_body(self, two_body_tree):
        refined = step3_refine(two_body_tree, 1e-8)
        # five pairs collapse to three classes: the two outer collinear points
        # and the two triangle points are mirror copies
        assert quotient_distinct(refined) == 3

    def test_quotient_requires_refined(self, two_body_tree):
        with pytest.raises(PipelineError):
            quotient_distinct(two_body_tree)


class TestRefinementBox:
    def test_relative_widths(self):
        box = refinement_box(np.array([2.0, -4.0]), 0.05)
        assert np.allclose(box.lower, [1.9, -4.2])
        assert np.allclose(box.upper, [2.1, -3.8])

    def test_degenerate_coordinate_widened(self):
        box = refinement_box(np.array([2.0, 0.0]), 0.05)
        assert box.upper[1] == pytest.approx(0.1)  # 0.05 * max|x0|
        assert box.lower[1] == pytest.approx(-0.1)


def test_step2_duplicate_tolerance(two_body_tree):
    # symmetric copies are distinct on purpose: the five points include both
    # triangle points and both outer collinear points
    pts = np.array(two_body_tree.restricted_points[0])
    assert len(pts) == 5
    for i in range(5):
        for j in range(i + 1, 5):
            assert np.max(np.abs(pts[i] - pts[j])) > 1e-8


def test_empty_base_error():
    from cbconfig import LocalSolverSettings

    ms = MassSystem.equal(2, 0.1)
    bad = ContinuationSettings(
        n_body=MultistartSettings(
            sample_count=50,
            plateau=30,
            sampler=SamplerSpec("pseudo-random", seed=999),
            solver=LocalSolverSettings(max_iterations=1),
        ),
        restricted_sample_count=10,
    )
    # one-iteration searches cannot converge: the pipeline must say so
    with pytest.raises(PipelineError, match="no base solutions"):
        build_tree(ms, ScaleMatrix(), bad)