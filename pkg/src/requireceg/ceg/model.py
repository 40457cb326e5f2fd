"""Core value types for causal-effect graphs.

A graph declares atomic condition nodes (C*) and effect nodes (E*), links
each effect to a Boolean expression over conditions (biconditional: the
effect holds exactly when its cause expression does), and adds constraints
among conditions plus masking restrictions among effects.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Union

from ..errors import InvariantError

NODE_ID_RE = re.compile(r"^[CE][A-Za-z0-9_]*$")


class NodeKind(str, Enum):
    CONDITION = "Condition"
    EFFECT = "Effect"


def kind_for_id(node_id: str) -> NodeKind:
    if not NODE_ID_RE.match(node_id):
        raise InvariantError(f"invalid node id '{node_id}'")
    return NodeKind.CONDITION if node_id.startswith("C") else NodeKind.EFFECT


@dataclass(frozen=True)
class AtomicNode:
    id: str
    kind: NodeKind
    description: str

    def __post_init__(self):
        if kind_for_id(self.id) is not self.kind:
            raise InvariantError(f"node id '{self.id}' does not agree with kind {self.kind.value}")
        if not self.description.strip():
            raise InvariantError(f"node '{self.id}' has an empty description")


@dataclass(frozen=True)
class Atom:
    condition: str


@dataclass(frozen=True)
class Not:
    operand: "CauseExpr"


@dataclass(frozen=True)
class And:
    operands: tuple["CauseExpr", ...]

    def __post_init__(self):
        if len(self.operands) < 2:
            raise InvariantError("AND requires at least two operands")


@dataclass(frozen=True)
class Or:
    operands: tuple["CauseExpr", ...]

    def __post_init__(self):
        if len(self.operands) < 2:
            raise InvariantError("OR requires at least two operands")


CauseExpr = Union[Atom, Not, And, Or]


def expr_atoms(expr: CauseExpr) -> set[str]:
    if isinstance(expr, Atom):
        return {expr.condition}
    if isinstance(expr, Not):
        return expr_atoms(expr.operand)
    atoms: set[str] = set()
    for operand in expr.operands:
        atoms |= expr_atoms(operand)
    return atoms


def eval_expr(expr: CauseExpr, assignment: Mapping[str, bool]) -> bool:
    if isinstance(expr, Atom):
        return bool(assignment[expr.condition])
    if isinstance(expr, Not):
        return not eval_expr(expr.operand, assignment)
    if isinstance(expr, And):
        return all(eval_expr(op, assignment) for op in expr.operands)
    return any(eval_expr(op, assignment) for op in expr.operands)


def expr_text(expr: CauseExpr) -> str:
    if isinstance(expr, Atom):
        return expr.condition
    if isinstance(expr, Not):
        return f"NOT({expr_text(expr.operand)})"
    op = "AND" if isinstance(expr, And) else "OR"
    return f"{op}({','.join(expr_text(o) for o in expr.operands)})"


class ConstraintOp(str, Enum):
    EXC = "EXC"  # operands may not both hold
    INC = "INC"  # at least one operand must hold
    REQ = "REQ"  # first operand requires the second
    XOR = "XOR"  # exactly one operand holds


SYMMETRIC_CONSTRAINTS = {ConstraintOp.EXC, ConstraintOp.INC, ConstraintOp.XOR}


@dataclass(frozen=True)
class CausalLink:
    cause: CauseExpr
    effect: str

    def statement_text(self) -> str:
        if isinstance(self.cause, Atom):
            return f"DIR({self.cause.condition})={self.effect}"
        return f"{expr_text(self.cause)}={self.effect}"


@dataclass(frozen=True)
class Constraint:
    op: ConstraintOp
    a: str
    b: str

    def __post_init__(self):
        # Symmetric operators are stored with sorted operands so that
        # EXC(C2,C1) and EXC(C1,C2) compare equal; REQ keeps its order.
        if self.op in SYMMETRIC_CONSTRAINTS and self.b < self.a:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    def statement_text(self) -> str:
        return f"{self.op.value}({self.a},{self.b})"

    def holds(self, assignment: Mapping[str, bool]) -> bool:
        va, vb = bool(assignment[self.a]), bool(assignment[self.b])
        if self.op is ConstraintOp.EXC:
            return not (va and vb)
        if self.op is ConstraintOp.INC:
            return va or vb
        if self.op is ConstraintOp.REQ:
            return (not va) or vb
        return va != vb


@dataclass(frozen=True)
class Restriction:
    a: str  # masking effect
    b: str  # masked effect

    op = "MSK"

    def statement_text(self) -> str:
        return f"MSK({self.a},{self.b})"


@dataclass(frozen=True)
class CausalEffectGraph:
    nodes: tuple[AtomicNode, ...]
    links: tuple[CausalLink, ...] = ()
    constraints: tuple[Constraint, ...] = ()
    restrictions: tuple[Restriction, ...] = ()
    raw_statements: tuple[str, ...] = ()
    parse_log: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        node_map = {node.id: node for node in self.nodes}
        if len(node_map) != len(self.nodes):
            raise InvariantError("duplicate node declarations")
        seen_effects: set[str] = set()
        for link in self.links:
            for cid in expr_atoms(link.cause):
                self._require(node_map, cid, NodeKind.CONDITION)
            self._require(node_map, link.effect, NodeKind.EFFECT)
            if link.effect in seen_effects:
                raise InvariantError(f"effect '{link.effect}' has more than one causal link")
            seen_effects.add(link.effect)
        for constraint in self.constraints:
            self._require(node_map, constraint.a, NodeKind.CONDITION)
            self._require(node_map, constraint.b, NodeKind.CONDITION)
        for restriction in self.restrictions:
            self._require(node_map, restriction.a, NodeKind.EFFECT)
            self._require(node_map, restriction.b, NodeKind.EFFECT)

    @staticmethod
    def _require(node_map: dict[str, AtomicNode], node_id: str, kind: NodeKind) -> None:
        node = node_map.get(node_id)
        if node is None:
            raise InvariantError(f"undeclared node '{node_id}'")
        if node.kind is not kind:
            raise InvariantError(f"node '{node_id}' is not a {kind.value}")

    @property
    def node_map(self) -> dict[str, AtomicNode]:
        return {node.id: node for node in self.nodes}

    def conditions(self) -> tuple[str, ...]:
        return tuple(sorted(n.id for n in self.nodes if n.kind is NodeKind.CONDITION))

    def effects(self) -> tuple[str, ...]:
        return tuple(sorted(n.id for n in self.nodes if n.kind is NodeKind.EFFECT))

    def link_for(self, effect_id: str) -> CausalLink | None:
        for link in self.links:
            if link.effect == effect_id:
                return link
        return None

    def statement_texts(self) -> tuple[str, ...]:
        links = sorted(self.links, key=lambda l: l.effect)
        constraints = sorted(self.constraints, key=lambda c: (c.op.value, c.a, c.b))
        restrictions = sorted(self.restrictions, key=lambda r: (r.a, r.b))
        return tuple(
            [l.statement_text() for l in links]
            + [c.statement_text() for c in constraints]
            + [r.statement_text() for r in restrictions]
        )


# A truth assignment is a plain mapping from condition id to bool, total over
# the graph's declared conditions.
TruthAssignment = dict[str, bool]
