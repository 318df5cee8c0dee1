"""Planar central and balanced configurations of the n-body problem.

Two solver routes: a direct stochastic multistart on the full system with a
very small extra mass, and a three-step continuation pipeline (n-body
solutions, restricted critical points, local refinement).  Results are
verified, deduplicated up to the admissible symmetry group, compared, and
rendered as SVG figures.
"""

__version__ = "0.1.0"

from .core import (
    CollisionError,
    MassSystem,
    NormalizedConfiguration,
    ScaleMatrix,
    center_of_mass,
    lambda_of,
    moment_of_inertia,
    normalize,
    objective,
    potential,
    potential_gradient,
    residual_n,
    residual_n1,
    restricted_gradient,
    restricted_potential,
)
from .derivatives import (
    HessianReport,
    hessian,
    jacobian_n,
    jacobian_n1,
    jacobian_restricted,
    potential_hessian,
    restricted_hessian,
)
from .symmetry import distance_signature, symmetry_orbit_match
from .sampling import Box, SamplerSpec, discrepancy_estimate, make_sampler, sample
from .local_solver import LocalResult, LocalSolverSettings, minimize
from .problems import (
    ResidualProblem,
    direct_problem,
    nbody_problem,
    refinement_problem,
    restricted_problem,
)
from .multistart import (
    MultistartSettings,
    SolutionRecord,
    SolutionRegistry,
    is_start_point,
    register,
    run,
)
from .continuation import (
    ContinuationSettings,
    ContinuationTree,
    PipelineError,
    RefinedSolution,
    build_tree,
    quotient_distinct,
    step1_nbody,
    step2_restricted,
    step3_refine,
)
from .metrics import (
    ComparisonReport,
    VerificationReport,
    delta_q0,
    match_and_delta_R,
    verify,
)
from .document import DocumentError, SolutionDocument, SolutionEntry, parse, serialize
from .runconfig import ConfigError, RunConfig, load_config, parse_config
from .svgplot import render_svg
