"""sprintopt: sprint-scoped hyperparameter search with spaces that shrink
under audit, priming rules between sprints, GP and TPE samplers, Hyperband
pruning, and threshold calibration utilities."""

from .calibrate import (
    CalibrationPolicy,
    FitReport,
    ThresholdSet,
    fit_with_calibration,
    hill_climb,
    micro_f_beta,
    permutations,
    scut,
    scut_per_class,
)
from .engine import (
    Engine,
    EngineError,
    PhaseReport,
    PrimingViolation,
    Sprint,
    SprintNameParts,
    Thread,
    ThreePhaseConfig,
    parse_sprint_name,
    rotate_subset,
    sprint_name,
)
from .gp import KernelSpec, acquisition_values, fit_kernel_params, gp_fit, gp_minimize, matern_kernel
from .hyperband import HyperbandConfig, bracket_schedule, derive_config, resource_ticks, should_prune
from .losses import ASLParams, asl_loss, grouping_space, log_linear_encode, uncertainty_weighted_loss
from .space import (
    Dimension,
    HPoint,
    MarginPolicy,
    SearchSpace,
    SpaceError,
    contains,
    freeze_dimension,
    prune_to_top_k,
    sample_uniform,
    unfreeze_dimension,
    widen_dimension,
)
from .store import EventStore
from .tpe import TPEConfig, fit_parzen, split_trials, tpe_suggest
from .trials import (
    FULL_FIDELITY,
    FidelitySpec,
    FunctionObjective,
    Provenance,
    SprintResult,
    Trial,
    TrialPruned,
    TrialStatus,
    incumbent,
)

__version__ = "0.1.0"

__all__ = [
    "ASLParams",
    "CalibrationPolicy",
    "Dimension",
    "Engine",
    "EngineError",
    "EventStore",
    "FULL_FIDELITY",
    "FidelitySpec",
    "FitReport",
    "FunctionObjective",
    "HPoint",
    "HyperbandConfig",
    "KernelSpec",
    "MarginPolicy",
    "PhaseReport",
    "PrimingViolation",
    "Provenance",
    "SearchSpace",
    "SpaceError",
    "Sprint",
    "SprintNameParts",
    "SprintResult",
    "TPEConfig",
    "Thread",
    "ThreePhaseConfig",
    "ThresholdSet",
    "Trial",
    "TrialPruned",
    "TrialStatus",
    "acquisition_values",
    "asl_loss",
    "bracket_schedule",
    "contains",
    "derive_config",
    "fit_kernel_params",
    "fit_parzen",
    "fit_with_calibration",
    "freeze_dimension",
    "gp_fit",
    "gp_minimize",
    "grouping_space",
    "hill_climb",
    "incumbent",
    "log_linear_encode",
    "matern_kernel",
    "micro_f_beta",
    "parse_sprint_name",
    "permutations",
    "prune_to_top_k",
    "resource_ticks",
    "rotate_subset",
    "sample_uniform",
    "scut",
    "scut_per_class",
    "should_prune",
    "split_trials",
    "sprint_name",
    "tpe_suggest",
    "uncertainty_weighted_loss",
    "unfreeze_dimension",
    "widen_dimension",
]
