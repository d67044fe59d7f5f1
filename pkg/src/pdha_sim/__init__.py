"""Grid automata with per-point modes: finite-difference flows, guard
switching, hybrid executions, and exact wave transport."""

from .automaton import (
    DiscretizationSpec,
    Dspdha,
    Event,
    FlowSpec,
    Guard,
    GuardDecl,
    InitSpec,
    InvariantViolation,
    ModelDescription,
    ModePde,
    RegionDecl,
    ResetDecl,
    ResetRule,
    SourceTerm,
    affine_source,
    apply_reset,
    apply_transition,
    build_rhs,
    check_invariants,
    discretize_model,
    eval_guards,
    validate,
)
from .errors import (
    DivergenceError,
    ModelFileError,
    PartitionError,
    PdhaError,
    StepSizeError,
    UnsupportedCombinationError,
    ValidationError,
)
from .executor import (
    Execution,
    ExecutionClass,
    HybridTimeTrajectory,
    IntervalRecord,
    ReachRecord,
    SimOptions,
    StructuralReport,
    check_cfl,
    classify_execution,
    integrate_step,
    locate_crossing,
    reach_record,
    simulate,
    structural_checks,
)
from .export import export_snapshot, run_summary
from .mesh import (
    DiscreteDomain,
    DiscretizationRecord,
    DiscretePartition,
    DiscreteState,
    FieldValues,
    Region,
    SpaceDomain,
    discretize_domain,
    make_state,
    partition_from_regions,
    regions_from_partition,
    validate_regions,
)
from .modelfile import load_model, model_from_dict, model_to_dict, save_model
from .models import (
    HeaterConfig,
    TrafficConfig,
    heater_description,
    heater_model,
    traffic_description,
    traffic_model,
)
from .schemes import (
    MIRROR,
    OUTFLOW,
    BoundaryCondition,
    FirstOrderSystem,
    SemiDiscreteSystem,
    StencilKind,
    characteristic_shift,
    dirichlet,
    order_reduce,
    second_difference,
    semi_discretize,
    upwind_first_difference,
)

__version__ = "0.1.0"
