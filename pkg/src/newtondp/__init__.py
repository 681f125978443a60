"""Dynamic programming for finite discounted MDPs as semismooth Newton-type root finding."""

from newtondp.bellman import (
    apply_bellman,
    apply_policy_bellman,
    apply_t_alpha,
    b_differential_element,
    greedy_policy,
    q_values,
    residual,
)
from newtondp.diagnostics import (
    asymptotic_rate_prediction,
    brute_force_optimal,
    contraction_ratios,
    empirical_rate,
    kappa_sequence,
    spectral_radius_estimate,
)
from newtondp.mdp import (
    InducedDynamics,
    Mdp,
    enumerate_policies,
    induced_dynamics,
    load_mdp,
    random_mdp,
    save_mdp,
    validate,
)
from newtondp.newton import (
    GeneralizedJacobian,
    Identity,
    ScaledIdentity,
    SolveResult,
    SolverConfig,
    alpha_value_iteration,
    linear_solve,
    newton_type_solve,
    policy_evaluation,
    policy_iteration,
    value_iteration,
)

__version__ = "0.1.0"
