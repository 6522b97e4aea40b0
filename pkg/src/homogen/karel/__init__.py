"""Karel grid-world domain: language, worlds, execution, and dataset sampling."""

from .lang import (
    ACTIONS,
    PREDICATES,
    Action,
    If,
    IfElse,
    KarelProgram,
    KarelSyntaxError,
    Not,
    Pred,
    Repeat,
    Seq,
    While,
    emit_tokens,
    parse_program,
    program_salients,
    program_to_text,
)
from .world import (
    DIRECTIONS,
    KarelGrid,
    grid_from_json,
    grid_salients,
    grid_to_json,
)
from .interp import (
    DEFAULT_STEP_LIMIT,
    CrashReason,
    ExecResult,
    branch_arms,
    execute,
)
from .gen import (
    DEFAULT_PRODUCTIONS,
    NARROW_SWEEP_PARAMS,
    GenerationStallError,
    MarkerCountDist,
    NarrowGridParams,
    ProductionTable,
    SynthesisTask,
    UncoverableProgramError,
    augment_action_only,
    enumerate_action_only,
    has_nested,
    make_task,
    salient_specs,
    sample_action_only,
    sample_marker_count,
    sample_narrow_grid,
    sample_program,
    sample_uniform_grid,
    satisfies_action_pruning,
    task_from_json,
    task_salients,
    task_source,
    task_to_json,
)

__all__ = [
    "ACTIONS",
    "PREDICATES",
    "Action",
    "If",
    "IfElse",
    "KarelProgram",
    "KarelSyntaxError",
    "Not",
    "Pred",
    "Repeat",
    "Seq",
    "While",
    "emit_tokens",
    "parse_program",
    "program_salients",
    "program_to_text",
    "DIRECTIONS",
    "KarelGrid",
    "grid_from_json",
    "grid_salients",
    "grid_to_json",
    "DEFAULT_STEP_LIMIT",
    "CrashReason",
    "ExecResult",
    "branch_arms",
    "execute",
    "DEFAULT_PRODUCTIONS",
    "NARROW_SWEEP_PARAMS",
    "GenerationStallError",
    "MarkerCountDist",
    "NarrowGridParams",
    "ProductionTable",
    "SynthesisTask",
    "UncoverableProgramError",
    "augment_action_only",
    "enumerate_action_only",
    "has_nested",
    "make_task",
    "salient_specs",
    "sample_action_only",
    "sample_marker_count",
    "sample_narrow_grid",
    "sample_program",
    "sample_uniform_grid",
    "satisfies_action_pruning",
    "task_from_json",
    "task_salients",
    "task_source",
    "task_to_json",
]
