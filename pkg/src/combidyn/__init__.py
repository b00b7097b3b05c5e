"""Optimization of binary decision vectors governing ODE systems.

Pipeline: integrate the system (``system``), solve the costate backward
(``adjoint``), take a payoff derivative in decision space (``gradient``),
solve the linearized 0-1 program (``solvers``), and certify the result
(``certify``).  ``refrigeration`` builds the coupled-fleet load-control
benchmark on top, ``scenario_io``/``cli`` are the batch front end.
"""

from .errors import (
    AdjointDivergedError,
    CombidynError,
    ConstraintError,
    DimensionError,
    EnumerationRefusedError,
    InfeasibleError,
    IntegrationDivergedError,
    NotRelaxableError,
    NumericError,
    ScenarioError,
    TuViolationError,
)
from .system import (
    AdjointTrajectory,
    SystemSpec,
    TimeGrid,
    Trajectory,
    affine_state_model,
    as_binary,
    evaluate_payoff,
    evaluate_variational_payoff,
    integrate,
    integrate_variational,
    is_binary,
    payoff_functional,
    trapezoid_weights,
    unit_direction,
)
from .adjoint import hamiltonian, solve_adjoint
from .gradient import (
    DERIVATIVE_KINDS,
    Gradient,
    costate_pairing,
    finite_difference_nonstandard,
    finite_difference_standard,
    nonstandard_derivative,
    reformulate,
    standard_derivative,
    variational_quotient,
)
from .simplex import LpProblem, solve_boxed_lp
from .solvers import (
    ConstraintSet,
    ExplicitSet,
    Knapsack,
    L0Band,
    TuRows,
    feasible_mask,
    is_feasible,
    is_totally_unimodular,
    solve_bruteforce,
    solve_greedy,
    solve_knapsack,
    solve_l0,
    solve_tu,
)
from .certify import (
    CertifiedSolution,
    ConcavityReport,
    SetFunctionReport,
    certify,
    check_concavity_inequality,
    check_monotone,
    check_submodular,
    monotonicity_report,
    submodularity_report,
)
from .refrigeration import (
    EtpParams,
    QuadraticPayoff,
    Scenario,
    StepResult,
    TargetBandCase,
    TransientConfig,
    TuCase,
    build_etp_system,
    build_transient_system,
    default_fleet,
    default_scenario,
    exclusion_budget_rows,
    penalty,
    quadratic_payoff_model,
    run_receding_horizon,
    solve_linearized,
    step_constraints,
    step_system,
    transient_members,
)
from .scenario_io import parse_scenario, write_scenario

__version__ = "0.1.0"
