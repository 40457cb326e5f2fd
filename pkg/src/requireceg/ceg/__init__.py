from .analysis import (
    ENUMERATION_CAP,
    EvalResult,
    consistent_assignments,
    diff_constraint_coverage,
    evaluate,
    find_uncovered_conditions,
    minimal_satisfying_assignments,
)
from .dsl import (
    FormalError,
    FormalErrorKind,
    check_formal,
    compose_source,
    parse_ceg,
    serialize_ceg,
)
from .model import (
    And,
    Atom,
    AtomicNode,
    CausalEffectGraph,
    CausalLink,
    CauseExpr,
    Constraint,
    ConstraintOp,
    NodeKind,
    Not,
    Or,
    Restriction,
    TruthAssignment,
    eval_expr,
    expr_atoms,
    expr_text,
)

__all__ = [
    "ENUMERATION_CAP",
    "And",
    "Atom",
    "AtomicNode",
    "CausalEffectGraph",
    "CausalLink",
    "CauseExpr",
    "Constraint",
    "ConstraintOp",
    "EvalResult",
    "FormalError",
    "FormalErrorKind",
    "NodeKind",
    "Not",
    "Or",
    "Restriction",
    "TruthAssignment",
    "check_formal",
    "compose_source",
    "consistent_assignments",
    "diff_constraint_coverage",
    "eval_expr",
    "evaluate",
    "expr_atoms",
    "expr_text",
    "find_uncovered_conditions",
    "minimal_satisfying_assignments",
    "parse_ceg",
    "serialize_ceg",
]
