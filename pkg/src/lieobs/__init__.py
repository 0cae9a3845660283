"""Local exponential observers on matrix Lie groups."""

__version__ = "0.1.0"

from .dynamics import (
    BatchTrajectory,
    InputSignal,
    IntegratorConfig,
    Trajectory,
    block_companion,
    integrate,
    integrate_step,
    linearization_spectrum,
    plant_rhs,
    run_batch,
    simulate,
    simulate_batch,
    simulate_commutator_pair,
)
from .error_functions import (
    algebra_error,
    closed_form_error_solution,
    decay_rate_fit,
    left_error,
    log_error,
    right_error,
    sandwich_bounds,
)
from .exceptions import (
    BranchCutViolation,
    DimensionMismatch,
    DomainViolation,
    GainsInvalid,
    InsufficientData,
    LieObsError,
    MissingData,
    NearBranchCut,
    NonConvergence,
    ParseError,
    ScenarioInvalid,
    Singular,
    StepFailure,
)
from .groups import (
    GroupFamily,
    exp_so3,
    is_in_algebra,
    is_in_group,
    log_so3_closed_form,
    project_algebra,
    random_rotation,
    rotation_angle,
    skew3,
    tangency_defect,
    unskew3,
)
from .linalg import (
    adjoint,
    commutator,
    inverse_general,
    inverse_neumann,
    mat_exp,
    mat_log_gregory,
    mat_log_principal,
    operator_norm,
    spectrum_report,
)
from .observers import (
    ChainState,
    ObserverGains,
    ObserverKind,
    lfso_direct_rhs,
    lfso_passive_rhs,
    lpso_direct_rhs,
    lpso_passive_rhs,
    observer_rhs,
    validate_gains,
)
from .scenario import Scenario, builtin, parse, serialize
