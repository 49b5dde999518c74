"""Equilibrium analysis for decision makers who infer causal effects from
observational data with self-chosen control sets."""

from .causal import (
    DeltaTable,
    best_reply_at,
    best_reply_set,
    delta,
    delta_table,
    score_from_delta,
    subjective_do_belief,
    tie_tolerance,
)
from .document import (
    DocumentError,
    DocumentParseError,
    ScenarioDocument,
    document_from_scenario,
    dumps,
    export_csv,
    export_json,
    load_scenario,
    loads,
    profile_from_document,
    to_jsonable,
    to_scenario,
    validate,
)
from .equilibrium import (
    DynamicsResult,
    EquilibriumError,
    EquilibriumReport,
    LadderRung,
    UndefinedCell,
    ViolationWitness,
    best_response_dynamics,
    certify_equilibrium,
    enumerate_pure_equilibria,
    verify_eps_equilibrium,
    verify_limit,
)
from .model import (
    DataTypeSpec,
    ModelError,
    Scenario,
    StrategyProfile,
    TrembleSchedule,
    TrembleSpec,
    action_rates,
    aggregate_behavior,
    apply_trembles,
    error_probability,
    induced_joint,
    welfare_loss,
)
from .ordering import (
    DominanceRelation,
    LayerPartition,
    OrderError,
    build_relation,
    is_complete,
    is_quasitransitive,
    layer_partition,
)
from .scenarios import (
    as_consequential,
    example_1_1_collider,
    example_1_1_confounder,
    example_3_1,
    example_4_1,
    matching_on_own_covariate,
    pandemic,
    pandemic_profile,
    prop2_cycle,
    prop2_incomplete,
    prop4,
    prop4_profile,
    prop5,
    prop5_profile,
)
from .tables import ConditionalTable, JointTable, TableError, VariableSpace, check_ci
from .worstcase import (
    BoundReport,
    DeltaAnnotation,
    SearchConfig,
    SearchRecord,
    WitnessInstance,
    WorstCaseError,
    check_annotations,
    check_bound,
    instance_digest,
    random_scenario,
    reverify,
    search_max_loss,
    verified_equilibria,
    witness_cycle,
    witness_full_loss,
    witness_incomplete,
    witness_incomplete_hetero,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "ConditionalTable",
    "DataTypeSpec",
    "DeltaAnnotation",
    "DeltaTable",
    "DocumentError",
    "DocumentParseError",
    "DynamicsResult",
    "EquilibriumError",
    "EquilibriumReport",
    "JointTable",
    "LadderRung",
    "LayerPartition",
    "ModelError",
    "OrderError",
    "DominanceRelation",
    "Scenario",
    "ScenarioDocument",
    "SearchConfig",
    "SearchRecord",
    "StrategyProfile",
    "TableError",
    "TrembleSchedule",
    "TrembleSpec",
    "UndefinedCell",
    "VariableSpace",
    "ViolationWitness",
    "WitnessInstance",
    "WorstCaseError",
    "action_rates",
    "aggregate_behavior",
    "apply_trembles",
    "as_consequential",
    "best_reply_at",
    "best_reply_set",
    "best_response_dynamics",
    "build_relation",
    "certify_equilibrium",
    "check_annotations",
    "check_bound",
    "check_ci",
    "delta",
    "delta_table",
    "document_from_scenario",
    "dumps",
    "enumerate_pure_equilibria",
    "error_probability",
    "example_1_1_collider",
    "example_1_1_confounder",
    "example_3_1",
    "example_4_1",
    "export_csv",
    "export_json",
    "induced_joint",
    "instance_digest",
    "is_complete",
    "is_quasitransitive",
    "layer_partition",
    "load_scenario",
    "loads",
    "matching_on_own_covariate",
    "pandemic",
    "pandemic_profile",
    "profile_from_document",
    "prop2_cycle",
    "prop2_incomplete",
    "prop4",
    "prop4_profile",
    "prop5",
    "prop5_profile",
    "random_scenario",
    "reverify",
    "score_from_delta",
    "search_max_loss",
    "subjective_do_belief",
    "tie_tolerance",
    "to_jsonable",
    "to_scenario",
    "validate",
    "verified_equilibria",
    "verify_eps_equilibrium",
    "verify_limit",
    "welfare_loss",
    "witness_cycle",
    "witness_full_loss",
    "witness_incomplete",
    "witness_incomplete_hetero",
]
