from .ast import (
    ExamplesTable,
    GherkinDocument,
    KeywordStats,
    NarrativeBlock,
    Scenario,
    ScenarioKind,
    Step,
    StepKeyword,
    StepKind,
    count_physical_lines,
    keyword_stats,
    parse_feature,
    serialize,
)
from .lint import LintFinding, LintRule, RULES, SyntaxAccuracy, acc_syn, lint

__all__ = [
    "ExamplesTable",
    "GherkinDocument",
    "KeywordStats",
    "LintFinding",
    "LintRule",
    "NarrativeBlock",
    "RULES",
    "Scenario",
    "ScenarioKind",
    "Step",
    "StepKeyword",
    "StepKind",
    "SyntaxAccuracy",
    "acc_syn",
    "count_physical_lines",
    "keyword_stats",
    "lint",
    "parse_feature",
    "serialize",
]
