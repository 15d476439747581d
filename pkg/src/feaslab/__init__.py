"""feaslab: projection methods and regularity diagnostics for convex feasibility."""

from .errors import DimensionMismatch, FeaslabError, InvalidSet, SolverFailure
from .sets import (
    DEFAULT_TOL,
    AffineFlat,
    Ball,
    Box,
    CircularCone,
    ConvexSet,
    Family,
    Halfspace,
    Hyperplane,
    Polytope,
    TolerancePolicy,
    TranslatedCone,
    as_point,
    contains,
    distance,
    dykstra_distance,
    dykstra_project,
    family_from_dict,
    family_to_dict,
    kolmogorov_margin,
    project,
    set_from_dict,
    set_to_dict,
)
from .conehull import (
    BoundedInteriorReport,
    ConeHull,
    EnlargementPair,
    bounded_interior_report,
    build_enlargement,
    cone_hull,
    lemma2_margin,
    ray_min_parameter,
    sup_side_point,
    symmetric_point,
)
from .iteration import (
    ControlSchedule,
    IterationTrace,
    estimate_k,
    k_to_lambda,
    lambda_to_k,
    mann_step,
    projection_algorithm,
    regularity_monitor,
    segmenting_matrix,
    segmenting_reduction,
)
from .lab import (
    Case3Params,
    GPRCertificate,
    GPRReport,
    Scenario,
    case3_distance,
    gpr_experiment,
    lemma1_check,
    lemma4_certificate,
    make_case4_instance,
    regularity_modulus,
    scenario_case1,
    scenario_case2,
    scenario_case3,
    scenario_case4,
)

__version__ = "0.1.0"
