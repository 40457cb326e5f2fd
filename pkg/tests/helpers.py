"""Shared test utilities: an independent truth-table oracle and random graphs.

The brute-force oracle re-derives every effect value from the implication
form of the link semantics ((cause -> e) and (not cause -> not e)) by trying
both candidate values, instead of assigning e = cause directly. Constraint
formulas are written out explicitly. It deliberately shares no code with the
production evaluator.
"""

from __future__ import annotations

import random

from requireceg.ceg.model import (
    And,
    Atom,
    AtomicNode,
    CausalEffectGraph,
    CausalLink,
    Constraint,
    ConstraintOp,
    NodeKind,
    Not,
    Or,
    Restriction,
)


def _cause_value(expr, assignment) -> bool:
    stack = [(expr, False)]
    values = {}
    while stack:
        node, expanded = stack.pop()
        if isinstance(node, Atom):
            values[id(node)] = assignment[node.condition]
            continue
        if not expanded:
            stack.append((node, True))
            children = (node.operand,) if isinstance(node, Not) else node.operands
            for child in children:
                stack.append((child, False))
            continue
        if isinstance(node, Not):
            values[id(node)] = not values[id(node.operand)]
        elif isinstance(node, And):
            values[id(node)] = all(values[id(c)] for c in node.operands)
        else:
            values[id(node)] = any(values[id(c)] for c in node.operands)
    return values[id(expr)]


def brute_force_effects(graph: CausalEffectGraph, assignment) -> dict[str, bool]:
    """Solve each effect from the biconditional formula instead of copying it."""
    solved = {}
    links = {link.effect: link for link in graph.links}
    for effect in graph.effects():
        link = links.get(effect)
        if link is None:
            solved[effect] = False
            continue
        cause = _cause_value(link.cause, assignment)
        candidates = [
            value for value in (False, True)
            if ((not cause) or value) and (cause or (not value))
        ]
        assert len(candidates) == 1, "biconditional must pin exactly one value"
        solved[effect] = candidates[0]
    return solved


def brute_force_violations(graph: CausalEffectGraph, assignment) -> set[Constraint]:
    violated = set()
    for constraint in graph.constraints:
        a = assignment[constraint.a]
        b = assignment[constraint.b]
        formulas = {
            ConstraintOp.EXC: not (a and b),
            ConstraintOp.INC: a or b,
            ConstraintOp.REQ: (not a) or b,
            ConstraintOp.XOR: (a or b) and not (a and b),
        }
        if not formulas[constraint.op]:
            violated.add(constraint)
    return violated


def brute_force_masked(graph: CausalEffectGraph, effects) -> set[str]:
    return {
        r.b for r in graph.restrictions
        if not ((not effects[r.a]) or (not effects[r.b]))
    }


def all_assignments(condition_ids):
    k = len(condition_ids)
    for i in range(2 ** k):
        yield {cid: bool((i >> j) & 1) for j, cid in enumerate(condition_ids)}


def random_expr(rng: random.Random, conditions, depth: int):
    if depth <= 0 or rng.random() < 0.45:
        return Atom(rng.choice(conditions))
    kind = rng.choice(("and", "or", "not"))
    if kind == "not":
        return Not(random_expr(rng, conditions, depth - 1))
    arity = rng.randrange(2, 4)
    parts = tuple(random_expr(rng, conditions, depth - 1) for _ in range(arity))
    return And(parts) if kind == "and" else Or(parts)


def random_graph(rng: random.Random, max_conditions: int = 8, max_effects: int = 8,
                 max_statements: int = 12) -> CausalEffectGraph:
    n_conditions = rng.randrange(1, max_conditions + 1)
    n_effects = rng.randrange(1, max_effects + 1)
    conditions = [f"C{i}" for i in range(1, n_conditions + 1)]
    effects = [f"E{i}" for i in range(1, n_effects + 1)]
    nodes = tuple(
        [AtomicNode(c, NodeKind.CONDITION, f"condition {c.lower()}") for c in conditions]
        + [AtomicNode(e, NodeKind.EFFECT, f"effect {e.lower()}") for e in effects]
    )
    budget = rng.randrange(1, max_statements + 1)
    linked = rng.sample(effects, k=min(rng.randrange(0, n_effects + 1), budget))
    links = tuple(CausalLink(random_expr(rng, conditions, 2), e) for e in sorted(linked))
    budget -= len(links)
    constraints = []
    if n_conditions >= 2:
        for _ in range(rng.randrange(0, min(budget, 4) + 1)):
            a, b = rng.sample(conditions, 2)
            constraints.append(Constraint(rng.choice(list(ConstraintOp)), a, b))
    budget -= len(constraints)
    restrictions = []
    if n_effects >= 2 and budget > 0:
        for _ in range(rng.randrange(0, min(budget, 2) + 1)):
            a, b = rng.sample(effects, 2)
            restrictions.append(Restriction(a, b))
    graph = CausalEffectGraph(
        nodes=nodes,
        links=links,
        constraints=tuple(dict.fromkeys(constraints)),
        restrictions=tuple(dict.fromkeys(restrictions)),
    )
    return graph
