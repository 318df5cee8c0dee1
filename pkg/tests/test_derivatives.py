import numpy as np
import pytest

from cbconfig import (
    MassSystem,
    ScaleMatrix,
    hessian,
    jacobian_n,
    jacobian_n1,
    jacobian_restricted,
    minimize,
    nbody_problem,
    potential_hessian,
    potential_gradient,
    residual_n,
    residual_n1,
    restricted_gradient,
    restricted_hessian,
)
from cbconfig.core import equilibrium_residual
from cbconfig.derivatives import equilibrium_jacobian
from conftest import central_difference, random_config


def rel_err(a, b):
    return np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(a)))


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("sigma_y", [1.0, 0.3])
def test_jacobian_n_matches_finite_differences(n, sigma_y):
    rng = np.random.default_rng(100 + n)
    ms = MassSystem.equal(n, 0.1)
    S = ScaleMatrix(1.0, sigma_y)
    for _ in range(10):
        q = random_config(rng, n).reshape(-1)
        h = 1e-6 * max(1.0, np.abs(q).max())
        fd = central_difference(lambda x: residual_n(ms, S, x), q, h)
        assert rel_err(jacobian_n(ms, S, q), fd) < 1e-5


def test_jacobian_n1_matches_finite_differences():
    rng = np.random.default_rng(200)
    ms = MassSystem.equal(3, 0.1, small_mass=1e-3)
    S = ScaleMatrix()
    q = random_config(rng, 3)
    p = np.array([2.4, -2.1])
    x = np.concatenate([q.reshape(-1), p])
    h = 1e-6 * max(1.0, np.abs(x).max())
    fd = central_difference(
        lambda z: residual_n1(ms, S, z[:-2], z[-2:]), x, h
    )
    assert rel_err(jacobian_n1(ms, S, q, p), fd) < 1e-5


def test_jacobian_restricted_matches_finite_differences(two_body, identity_scale, pair_sqrt5):
    p0 = np.array([1.1, 0.7])
    fd = central_difference(
        lambda p: restricted_gradient(two_body, identity_scale, pair_sqrt5, p), p0, 1e-6
    )
    assert rel_err(jacobian_restricted(two_body, identity_scale, pair_sqrt5, p0), fd) < 1e-5


def test_potential_hessian_matches_gradient_differences():
    rng = np.random.default_rng(300)
    ms = MassSystem(np.array([0.1, 0.25, 0.4]))
    q = random_config(rng, 3).reshape(-1)
    h = 1e-6 * max(1.0, np.abs(q).max())
    fd = central_difference(lambda x: potential_gradient(ms, x), q, h)
    assert rel_err(potential_hessian(ms, q), fd) < 1e-5


def test_hessian_rank_equilateral(equilateral3, identity_scale):
    ms = MassSystem.equal(3, 0.1)
    _, report = hessian(ms, identity_scale, equilateral3)
    assert report.rank == 5
    assert report.nondegenerate
    assert len(report.smallest_singular_values) == 3


def test_hessian_rank_bc_solution(bc_scale):
    # solver-found anisotropic solution: y-axis pair at (0, +-b), b^2 = 1/(2 m sigma_y)
    ms = MassSystem.equal(2, 0.1)
    prob = nbody_problem(ms, bc_scale)
    res = minimize(prob.residual, prob.jacobian, prob.box, np.array([0.3, -3.5, -0.3, 3.5]))
    assert res.converged and res.objective < 1e-20
    _, report = hessian(ms, bc_scale, prob.postprocess(res.point))
    assert report.rank == 4
    assert report.nondegenerate


def test_restricted_hessian_full_rank_at_triangle_point(two_body, identity_scale, pair_sqrt5):
    _, full = restricted_hessian(two_body, identity_scale, pair_sqrt5, [0.0, np.sqrt(15.0)])
    assert full


def test_restricted_hessian_far_field(two_body, identity_scale, pair_sqrt5):
    from cbconfig import potential

    u = potential(two_body, pair_sqrt5)
    h, full = restricted_hessian(two_body, identity_scale, pair_sqrt5, [900.0, 450.0])
    assert full
    assert np.allclose(h, u * np.eye(2), rtol=1e-4)


def test_jacobian_hessian_mass_weighting_identity(two_body, identity_scale, pair_sqrt5):
    # M J = H - U * outer(SMq, SMq) at an exact solution
    from cbconfig import potential

    q = pair_sqrt5
    u = potential(two_body, q)
    jac = jacobian_n(two_body, identity_scale, q)
    hess, _ = hessian(two_body, identity_scale, q)
    mvec = np.repeat(two_body.masses, 2)
    smq = np.tile(identity_scale.diag, 2) * mvec * q
    lhs = mvec[:, None] * jac
    rhs = hess - u * np.outer(smq, smq)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_jacobian_commutes_with_reflection(two_body, identity_scale):
    q = np.array([-1.4, 0.0, 1.4, 0.0])
    refl = np.diag([1.0, -1.0, 1.0, -1.0])
    jac = jacobian_n(two_body, identity_scale, q)
    q_ref = refl @ q
    jac_ref = jacobian_n(two_body, identity_scale, q_ref)
    assert np.allclose(refl @ jac @ refl, jac_ref, atol=1e-12)


def test_problem_closures_match_reference_functions(bc_scale):
    # the solver-facing fused evaluations must agree with the public formulas
    rng = np.random.default_rng(400)
    ms = MassSystem.equal(3, 0.1)
    prob = nbody_problem(ms, bc_scale)
    q = random_config(rng, 3).reshape(-1)
    assert np.array_equal(prob.residual(q), equilibrium_residual(ms.masses, bc_scale, q))
    assert np.array_equal(prob.jacobian(q), equilibrium_jacobian(ms.masses, bc_scale, q))


def test_restricted_problem_closures_match_reference(two_body, identity_scale, pair_sqrt5):
    from cbconfig import restricted_problem

    prob = restricted_problem(two_body, identity_scale, pair_sqrt5)
    p = np.array([0.9, -1.8])
    assert np.allclose(
        prob.residual(p),
        restricted_gradient(two_body, identity_scale, pair_sqrt5, p),
        rtol=0,
        atol=1e-18,
    )
    assert np.allclose(
        prob.jacobian(p),
        jacobian_restricted(two_body, identity_scale, pair_sqrt5, p),
        rtol=1e-15,
        atol=1e-18,
    )
