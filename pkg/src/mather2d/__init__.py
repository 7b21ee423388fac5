"""Average-action (Mather alpha/beta) computations for a magnetic Lagrangian
on the two-torus, L = |v|^2/2 + a cos(2 pi x) v2.

Layers, lowest first: model (types and closed-form maps), flow (Runge-Kutta
orbits and invariant monitoring), graphs (the explicitly integrable a = 1
structure), loops (variational beta estimates from periodic minimizers),
convex (tables, envelopes, conjugation, corners and flats), cli (the
config-driven command front end).
"""

from .config import ConfigError, RunConfig, default_config_dict
from .convex import (
    BoundaryAttained,
    ConvexTable,
    CornerReport,
    alpha_from_beta,
    build_beta_table,
    convexify,
    corner_scan,
    double_conjugate,
    fenchel_residual,
    flat_detect_alpha,
    slope_profile,
    subdifferential_beta,
)
from .flow import (
    FlowState,
    NonFiniteState,
    Trajectory,
    ZeroVelocity,
    cloud_distance,
    first_integral_drift,
    integrate,
    omega_limit_estimate,
    rotation_vector_estimate,
    vector_field,
)
from .graphs import (
    CriticalPoint,
    GraphParams,
    InconclusiveWitness,
    NoGraph,
    SingularOrbit,
    WitnessReport,
    absorbing_witness,
    cohomology_class,
    critical_points,
    eta_form,
    first_integral,
    graph_chart_distance,
    graph_exists,
    graph_invariance_check,
    graph_momentum,
    region_scan,
    saddle_class,
    singular_rotation_vectors,
    solve_branch,
)
from .loops import (
    DiscreteLoop,
    MinimizeReport,
    NoConvergence,
    action_gradient,
    beta_estimate,
    brute_force_beta,
    discrete_action,
    minimize_loop,
)
from .model import (
    CohomologyClass,
    CotangentVec,
    HomologyClass,
    LiftedPoint,
    MagneticModel,
    TangentVec,
    TorusPoint,
    constant_form_eval,
    cos_two_pi,
    energy,
    hamiltonian,
    inverse_legendre,
    lagrangian,
    legendre,
    pairing,
    sin_two_pi,
)

__version__ = "0.1.0"
