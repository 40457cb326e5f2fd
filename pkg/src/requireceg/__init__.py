"""requireceg: elicit, formally check, and review Gherkin requirements
through causal-effect graphs backed by a pluggable text-generation oracle."""

from . import errors
from .ceg import (
    CausalEffectGraph,
    check_formal,
    consistent_assignments,
    diff_constraint_coverage,
    evaluate,
    find_uncovered_conditions,
    parse_ceg,
    serialize_ceg,
)
from .elicitation import (
    FeatureNode,
    FeatureTree,
    build_ceg,
    draft_gherkin,
    elicit_system_behavior,
    elicit_user_behavior,
    generate_feature_tree,
    identify_atoms,
)
from .gherkin import (
    GherkinDocument,
    acc_syn,
    keyword_stats,
    lint,
    parse_feature,
    serialize,
)
from .intervention import construct_iqs, heal, semantic_check
from .metrics import classify_furps, diversity, project_report, readability
from .oracle import HttpOracle, MockOracle, Oracle, OracleRequest, load_profile
from .pipeline import (
    PipelineConfig,
    RunManifest,
    compare_against_reference,
    run_dataset,
    run_pipeline,
)
from .review import bind_steps, check_scenario, review, synthesize_missing

__version__ = "0.1.0"

__all__ = [
    "CausalEffectGraph",
    "FeatureNode",
    "FeatureTree",
    "GherkinDocument",
    "HttpOracle",
    "MockOracle",
    "Oracle",
    "OracleRequest",
    "PipelineConfig",
    "RunManifest",
    "acc_syn",
    "bind_steps",
    "build_ceg",
    "check_formal",
    "check_scenario",
    "classify_furps",
    "compare_against_reference",
    "consistent_assignments",
    "construct_iqs",
    "diff_constraint_coverage",
    "diversity",
    "draft_gherkin",
    "elicit_system_behavior",
    "elicit_user_behavior",
    "errors",
    "evaluate",
    "find_uncovered_conditions",
    "generate_feature_tree",
    "heal",
    "identify_atoms",
    "keyword_stats",
    "lint",
    "load_profile",
    "parse_ceg",
    "parse_feature",
    "project_report",
    "readability",
    "review",
    "run_dataset",
    "run_pipeline",
    "semantic_check",
    "serialize",
    "serialize_ceg",
    "synthesize_missing",
]
