"""Boolean analysis of causal-effect graphs.

Evaluation gives every linked effect the value of its cause expression
(biconditional semantics); unlinked effects are false. Constraint checking
and the exhaustive searches below are brute force over all assignments,
which is exact and fast up to the enumeration cap.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

from ..errors import IncompleteAssignment, TooManyConditions
from .model import (
    CausalEffectGraph,
    CauseExpr,
    Constraint,
    TruthAssignment,
    eval_expr,
    expr_atoms,
)

ENUMERATION_CAP = 20


class EvalResult(NamedTuple):
    effects: dict[str, bool]
    violated_constraints: list[Constraint]
    masked_effects: list[str]


def evaluate(graph: CausalEffectGraph, assignment: TruthAssignment) -> EvalResult:
    """Evaluate all effects, constraint violations, and mask conflicts."""
    missing = [c for c in graph.conditions() if c not in assignment]
    if missing:
        raise IncompleteAssignment(f"no value for condition(s): {', '.join(missing)}")
    effects = {e: False for e in graph.effects()}
    for link in graph.links:
        effects[link.effect] = eval_expr(link.cause, assignment)
    violated = [c for c in graph.constraints if not c.holds(assignment)]
    violated.sort(key=lambda c: (c.op.value, c.a, c.b))
    masked = sorted(
        {r.b for r in graph.restrictions if effects.get(r.a) and effects.get(r.b)}
    )
    return EvalResult(effects=effects, violated_constraints=violated, masked_effects=masked)


def _assignments(condition_ids: Sequence[str]) -> Iterable[TruthAssignment]:
    """All assignments, true-first per condition in sorted-id order."""
    k = len(condition_ids)
    for i in range(2 ** k):
        yield {
            cid: ((i >> (k - 1 - j)) & 1) == 0
            for j, cid in enumerate(condition_ids)
        }


def _check_cap(graph: CausalEffectGraph, cap: int) -> tuple[str, ...]:
    conditions = graph.conditions()
    if len(conditions) > cap:
        raise TooManyConditions(
            f"{len(conditions)} conditions exceed the enumeration cap of {cap}"
        )
    return conditions


def consistent_assignments(graph: CausalEffectGraph,
                           cap: int = ENUMERATION_CAP) -> list[TruthAssignment]:
    """Every assignment satisfying all constraints; empty means unsatisfiable."""
    conditions = _check_cap(graph, cap)
    return [
        assignment
        for assignment in _assignments(conditions)
        if all(c.holds(assignment) for c in graph.constraints)
    ]


def find_uncovered_conditions(graph: CausalEffectGraph,
                              cap: int = ENUMERATION_CAP) -> list[TruthAssignment]:
    """Consistent assignments under which no linked effect fires.

    These are the missing-edge-case witnesses: situations the constraint set
    allows but for which the graph specifies no behavior.
    """
    uncovered = []
    for assignment in consistent_assignments(graph, cap):
        if not any(eval_expr(link.cause, assignment) for link in graph.links):
            uncovered.append(assignment)
    return uncovered


ConstraintPattern = Sequence[Constraint]


def diff_constraint_coverage(graph: CausalEffectGraph,
                             required: Sequence[ConstraintPattern | Constraint],
                             cap: int = ENUMERATION_CAP) -> list[ConstraintPattern]:
    """Report required constraint patterns not entailed by the graph.

    Each pattern is a disjunction of alternatives; it is entailed when every
    consistent assignment of the graph satisfies at least one alternative.
    """
    node_map = graph.node_map
    patterns: list[tuple[ConstraintPattern | Constraint, tuple[Constraint, ...]]] = []
    for pattern in required:
        alternatives = (pattern,) if isinstance(pattern, Constraint) else tuple(pattern)
        if not alternatives:
            raise ValueError("a required pattern must have at least one alternative")
        for alt in alternatives:
            for operand in (alt.a, alt.b):
                if operand not in node_map:
                    raise ValueError(f"pattern references undeclared condition '{operand}'")
        patterns.append((pattern, alternatives))
    assignments = consistent_assignments(graph, cap)
    missing = []
    for original, alternatives in patterns:
        entailed = all(
            any(alt.holds(assignment) for alt in alternatives)
            for assignment in assignments
        )
        if not entailed:
            missing.append(original)
    return missing


def minimal_satisfying_assignments(expr: CauseExpr) -> list[dict[str, bool]]:
    """All minimal partial assignments over the expression's support forcing it true.

    A partial assignment forces the expression true when every completion of
    the unassigned support variables evaluates true. Minimality is by subset:
    no variable can be dropped. Result order is deterministic.
    """
    support = sorted(expr_atoms(expr))
    if not support:
        return []
    full = [dict(a) for a in _assignments(support) if eval_expr(expr, a)]
    if not full:
        return []

    force_cache: dict[frozenset, bool] = {}

    def forces(partial: frozenset) -> bool:
        cached = force_cache.get(partial)
        if cached is not None:
            return cached
        fixed = dict(partial)
        free = [v for v in support if v not in fixed]
        result = True
        for completion in _assignments(free):
            trial = {**fixed, **completion}
            if not eval_expr(expr, trial):
                result = False
                break
        force_cache[partial] = result
        return result

    minimal: set[frozenset] = set()
    visited: set[frozenset] = set()

    def shrink(partial: frozenset) -> None:
        if partial in visited:
            return
        visited.add(partial)
        reducible = False
        for item in sorted(partial):
            sub = partial - {item}
            if sub and forces(sub):
                reducible = True
                shrink(sub)
        if not reducible:
            minimal.add(partial)

    for assignment in full:
        shrink(frozenset(assignment.items()))
    result = [dict(sorted(p)) for p in minimal]
    result.sort(key=lambda p: (len(p), sorted(p.items())))
    return result
