import numpy as np
import pytest

from cbconfig import (
    ContinuationTree,
    MassSystem,
    RefinedSolution,
    ScaleMatrix,
    delta_q0,
    match_and_delta_R,
    verify,
)
from cbconfig.continuation import PipelineError
from cbconfig.multistart import SolutionRecord
from cbconfig.symmetry import distance_signature


def make_tree(refined_groups, masses=None, epsilon=1e-8, scale=None):
    """Minimal tree carrying refined solutions for the metric functions."""
    masses = masses if masses is not None else MassSystem.equal(2, 0.1, 1e-9)
    groups = []
    for k, sols in enumerate(refined_groups):
        group = []
        for l, coords in enumerate(sols):
            coords = np.asarray(coords, float).reshape(-1)
            group.append(
                RefinedSolution(k, l, coords, coords, True, 0.0, 0.0, 0.0)
            )
        groups.append(group)
    base = [
        SolutionRecord(g[0].coords[:-2], 0.0, 0.0, 1.0, np.empty(0), 0, 0)
        for g in groups
    ]
    return ContinuationTree(
        masses=masses,
        scale=scale or ScaleMatrix(),
        epsilon=epsilon,
        base_solutions=base,
        restricted_points=[[s.coords[-2:] for s in g] for g in groups],
        refined=groups,
    )


class TestVerify:
    def test_exact_pair(self, two_body, identity_scale, pair_sqrt5):
        report = verify(two_body, identity_scale, pair_sqrt5)
        assert report.residual_inf < 1e-14
        assert report.com_norm < 1e-14
        assert report.inertia_dev < 1e-14
        assert report.lam == pytest.approx(0.01 / (2 * np.sqrt(5)))
        assert report.hessian.rank == 3  # 2n-1 in central mode
        assert report.passed()

    def test_perturbed_solution(self, two_body, identity_scale, pair_sqrt5):
        q = pair_sqrt5.copy()
        q[0] += 1e-3
        report = verify(two_body, identity_scale, q)
        # response scale: multiplier ~1e-2 times the shift, so a few 1e-6
        assert 1e-6 < report.residual_inf < 1e-1
        assert not report.passed()

    def test_equilateral_nondegenerate(self, equilateral3, identity_scale):
        report = verify(MassSystem.equal(3, 0.1), identity_scale, equilateral3)
        assert report.hessian.rank == 5
        assert report.hessian.nondegenerate

    def test_collision_is_failed_verification(self, two_body, identity_scale):
        report = verify(two_body, identity_scale, [(0, 0), (0, 0)])
        assert report.collision
        assert not report.passed()

    def test_mode_validation(self, two_body, identity_scale, pair_sqrt5):
        with pytest.raises(ValueError):
            verify(two_body, identity_scale, pair_sqrt5, mode="weird")


class TestDeltaQ0:
    def test_zero_for_identical(self):
        tree = make_tree([[np.arange(6.0)], [np.arange(6.0) + 3]])
        per, agg = delta_q0(tree)
        assert per == [[0.0], [0.0]]
        assert agg == 0.0

    def test_synthetic_offsets(self):
        # two points, displaced by (3,4) and (0,0): RMS = sqrt(25/2)
        initial = np.array([0.0, 0.0, 1.0, 1.0])
        moved = np.array([3.0, 4.0, 1.0, 1.0])
        sol = RefinedSolution(0, 0, initial, moved, True, 0.0, 0.0, 0.0)
        from cbconfig.continuation import _rms_displacement

        assert _rms_displacement(moved, initial) == pytest.approx(np.sqrt(25 / 2))

    def test_aggregate_invariant_under_reordering(self):
        rng = np.random.default_rng(5)
        groups = [[rng.normal(size=6) for _ in range(3)], [rng.normal(size=6)]]
        tree = make_tree(groups)
        for g, vals in zip(tree.refined, [[0.1, 0.2, 0.3], [0.4]]):
            for s, v in zip(g, vals):
                s.delta_q0 = v
        _, agg = delta_q0(tree)

        tree2 = make_tree([list(reversed(groups[0])), groups[1]][::-1])
        for g, vals in zip(tree2.refined, [[0.4], [0.3, 0.2, 0.1]]):
            for s, v in zip(g, vals):
                s.delta_q0 = v
        _, agg2 = delta_q0(tree2)
        assert agg == pytest.approx(agg2)

    def test_requires_refined(self):
        tree = make_tree([[np.arange(6.0)]])
        tree.refined = []
        with pytest.raises(PipelineError):
            delta_q0(tree)


class TestMatchAndDeltaR:
    def setup_method(self):
        rng = np.random.default_rng(21)
        self.solutions = [rng.normal(size=6) for _ in range(4)]
        self.tree = make_tree([self.solutions[:2], self.solutions[2:]])

    def test_identity_match(self):
        report = match_and_delta_R(list(self.solutions), self.tree)
        assert report.delta_R == 0.0
        pairs = {(m.base_index, m.point_index) for m in report.matches}
        assert pairs == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_permuted_bodies_leave_delta_unchanged(self):
        # relabeling bodies of a direct solution does not change its match
        shuffled = self.solutions[0].reshape(-1, 2)[[2, 0, 1]].reshape(-1)
        report = match_and_delta_R([shuffled], self.tree)
        assert report.matches[0].delta_R == pytest.approx(0.0, abs=1e-12)

    def test_size_mismatch_is_structural_error(self):
        with pytest.raises(ValueError, match="distance lists differ in size"):
            match_and_delta_R([np.arange(8.0)], self.tree)

    def test_hausdorff_style_bound(self):
        rng = np.random.default_rng(33)
        direct = [s + 1e-7 * rng.normal(size=6) for s in self.solutions]
        report = match_and_delta_R(direct, self.tree)
        n_dist = distance_signature(self.solutions[0]).size
        for coords, match in zip(direct, report.matches):
            target = self.tree.refined_list()[
                [  # locate the matched solution
                    i
                    for i, s in enumerate(self.tree.refined_list())
                    if (s.base_index, s.point_index)
                    == (match.base_index, match.point_index)
                ][0]
            ]
            gap = np.max(
                np.abs(distance_signature(coords) - distance_signature(target.coords))
            )
            assert match.delta_R <= np.sqrt(n_dist) * gap + 1e-15

    def test_pairs_primaries_option(self):
        report = match_and_delta_R(list(self.solutions), self.tree, pairs="primaries")
        assert report.delta_R == 0.0
        with pytest.raises(ValueError):
            match_and_delta_R(list(self.solutions), self.tree, pairs="bodies")
