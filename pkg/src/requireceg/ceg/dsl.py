"""Text format for causal-effect graphs: parsing, formal checking, serialization.

One statement per line:

    C1: the consumer requests to cancel the order     (condition declaration)
    E1: the order is canceled                         (effect declaration)
    AND(C1,C2)=E1                                     (causal link)
    EXC(C1,C3)                                        (constraint)
    MSK(E1,E2)                                        (restriction)
    # free comment

Parsing is tolerant of formally invalid statements: they are kept verbatim
in the graph's raw statement list (and excluded from the typed graph) so the
formal checker can report them. Only statements that cannot be tokenized at
all raise DslSyntaxError.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from ..errors import DslSyntaxError
from .model import (
    And,
    Atom,
    AtomicNode,
    CausalEffectGraph,
    CausalLink,
    CauseExpr,
    Constraint,
    ConstraintOp,
    NODE_ID_RE,
    NodeKind,
    Not,
    Or,
    Restriction,
    kind_for_id,
)

LINK_OPS = {"DIR", "AND", "OR", "NOT"}
CONSTRAINT_OPS = {"EXC", "INC", "REQ", "XOR"}
RESTRICTION_OPS = {"MSK"}
KNOWN_OPS = LINK_OPS | CONSTRAINT_OPS | RESTRICTION_OPS

_DECL_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.*)$")
_TOKEN_RE = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_]*)|([(),=])|(\S))")


class FormalErrorKind(str, Enum):
    UNKNOWN_OPERATOR = "UnknownOperator"
    ARITY_MISMATCH = "ArityMismatch"
    EFFECT_AS_CAUSE = "EffectAsCause"
    CONDITION_AS_EFFECT = "ConditionAsEffect"
    EQUALS_IN_CONSTRAINT = "EqualsInConstraint"
    UNDECLARED_NODE = "UndeclaredNode"
    DUPLICATE_EFFECT_LINK = "DuplicateEffectLink"


@dataclass(frozen=True)
class FormalError:
    statement_text: str
    kind: FormalErrorKind
    detail: str

    def to_dict(self) -> dict:
        return {
            "statement": self.statement_text,
            "kind": self.kind.value,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class _Node:
    """Structural parse of one statement: operator tree plus optional '=' target."""

    op: Optional[str]  # None for a bare identifier
    name: Optional[str]  # identifier for bare atoms
    args: tuple["_Node", ...]

    def is_atom(self) -> bool:
        return self.op is None


@dataclass(frozen=True)
class _RawStatement:
    text: str
    head: _Node
    target: Optional[str]


def _tokenize(text: str, line: int) -> list[tuple[str, str, int]]:
    tokens: list[tuple[str, str, int]] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            break
        ident, punct, junk = match.group(1), match.group(2), match.group(3)
        column = match.start(1 if ident else 2 if punct else 3) + 1
        if junk is not None:
            raise DslSyntaxError(f"unknown token '{junk}'", line, column)
        if ident is not None:
            tokens.append(("id", ident, column))
        else:
            tokens.append((punct, punct, column))
        pos = match.end()
    return tokens


def _parse_statement(text: str, line: int = 1) -> _RawStatement:
    tokens = _tokenize(text, line)
    if not tokens:
        raise DslSyntaxError("empty statement", line)
    pos = 0

    def peek() -> Optional[tuple[str, str, int]]:
        return tokens[pos] if pos < len(tokens) else None

    def take(kind: str) -> tuple[str, str, int]:
        nonlocal pos
        token = peek()
        if token is None or token[0] != kind:
            where = token[2] if token else (tokens[-1][2] + 1)
            raise DslSyntaxError(f"expected '{kind}'", line, where)
        pos += 1
        return token

    def parse_expr() -> _Node:
        nonlocal pos
        kind, value, column = take("id")
        token = peek()
        if token is not None and token[0] == "(":
            take("(")
            args = [parse_expr()]
            while True:
                token = peek()
                if token is None:
                    raise DslSyntaxError("unbalanced parenthesis", line, tokens[-1][2] + 1)
                if token[0] == ",":
                    take(",")
                    args.append(parse_expr())
                elif token[0] == ")":
                    take(")")
                    break
                else:
                    raise DslSyntaxError(f"unexpected token '{token[1]}'", line, token[2])
            return _Node(op=value, name=None, args=tuple(args))
        return _Node(op=None, name=value, args=())

    head = parse_expr()
    target: Optional[str] = None
    token = peek()
    if token is not None and token[0] == "=":
        take("=")
        _, target, _ = take("id")
        token = peek()
    if token is not None:
        raise DslSyntaxError(f"unexpected trailing token '{token[1]}'", line, token[2])
    return _RawStatement(text=text, head=head, target=target)


def _check_cause_expr(node: _Node, statement: str, nodes: dict[str, AtomicNode],
                      errors: list[FormalError]) -> Optional[CauseExpr]:
    """Validate one cause expression tree; return the typed expression if clean."""
    if node.is_atom():
        name = node.name or ""
        declared = nodes.get(name)
        if declared is None:
            errors.append(FormalError(statement, FormalErrorKind.UNDECLARED_NODE,
                                      f"'{name}' is not a declared node"))
            return None
        if declared.kind is NodeKind.EFFECT:
            errors.append(FormalError(statement, FormalErrorKind.EFFECT_AS_CAUSE,
                                      f"effect '{name}' used inside a cause expression"))
            return None
        return Atom(name)
    op = node.op or ""
    if op not in LINK_OPS:
        detail = (f"'{op}' is not a recognized operator" if op not in KNOWN_OPS
                  else f"'{op}' may not be nested inside a cause expression")
        errors.append(FormalError(statement, FormalErrorKind.UNKNOWN_OPERATOR, detail))
        return None
    if op in ("DIR", "NOT") and len(node.args) != 1:
        errors.append(FormalError(statement, FormalErrorKind.ARITY_MISMATCH,
                                  f"{op} takes exactly one argument, got {len(node.args)}"))
        return None
    if op in ("AND", "OR") and len(node.args) < 2:
        errors.append(FormalError(statement, FormalErrorKind.ARITY_MISMATCH,
                                  f"{op} takes at least two arguments, got {len(node.args)}"))
        return None
    parts = [_check_cause_expr(arg, statement, nodes, errors) for arg in node.args]
    if any(part is None for part in parts):
        return None
    if op == "DIR":
        return parts[0]
    if op == "NOT":
        return Not(parts[0])
    if op == "AND":
        return And(tuple(parts))
    return Or(tuple(parts))


def _check_statement(raw: _RawStatement, nodes: dict[str, AtomicNode],
                     errors: list[FormalError]) -> Optional[object]:
    """Return a typed CausalLink/Constraint/Restriction, or None and record errors."""
    statement = raw.text
    head = raw.head
    if head.is_atom():
        if raw.target is None:
            errors.append(FormalError(statement, FormalErrorKind.UNKNOWN_OPERATOR,
                                      "statement must apply an operator"))
            return None
        # Bare "C1=E1" is accepted as shorthand for DIR(C1)=E1.
        before = len(errors)
        cause = _check_cause_expr(head, statement, nodes, errors)
        target_ok = _check_link_target(raw.target, statement, nodes, errors)
        if cause is None or not target_ok or len(errors) > before:
            return None
        return CausalLink(cause=cause, effect=raw.target)
    op = head.op or ""
    if op in LINK_OPS:
        if raw.target is None:
            errors.append(FormalError(statement, FormalErrorKind.ARITY_MISMATCH,
                                      f"link operator {op} requires '=<effect>'"))
            return None
        before = len(errors)
        cause = _check_cause_expr(head, statement, nodes, errors)
        target_ok = _check_link_target(raw.target, statement, nodes, errors)
        if cause is None or not target_ok or len(errors) > before:
            return None
        return CausalLink(cause=cause, effect=raw.target)
    if op in CONSTRAINT_OPS or op in RESTRICTION_OPS:
        clean = True
        if raw.target is not None:
            errors.append(FormalError(statement, FormalErrorKind.EQUALS_IN_CONSTRAINT,
                                      f"{op} may not be followed by '='"))
            clean = False
        if len(head.args) != 2:
            errors.append(FormalError(statement, FormalErrorKind.ARITY_MISMATCH,
                                      f"{op} takes exactly two arguments, got {len(head.args)}"))
            return None
        operands: list[str] = []
        want = NodeKind.CONDITION if op in CONSTRAINT_OPS else NodeKind.EFFECT
        for arg in head.args:
            if not arg.is_atom():
                errors.append(FormalError(statement, FormalErrorKind.UNKNOWN_OPERATOR,
                                          f"'{arg.op}' may not be nested inside {op}"))
                clean = False
                continue
            name = arg.name or ""
            declared = nodes.get(name)
            if declared is None:
                errors.append(FormalError(statement, FormalErrorKind.UNDECLARED_NODE,
                                          f"'{name}' is not a declared node"))
                clean = False
            elif declared.kind is not want:
                kind = (FormalErrorKind.EFFECT_AS_CAUSE if want is NodeKind.CONDITION
                        else FormalErrorKind.CONDITION_AS_EFFECT)
                errors.append(FormalError(
                    statement, kind,
                    f"{op} requires {want.value} operands, '{name}' is not one"))
                clean = False
            else:
                operands.append(name)
        if not clean:
            return None
        if op in CONSTRAINT_OPS:
            return Constraint(ConstraintOp(op), operands[0], operands[1])
        return Restriction(operands[0], operands[1])
    errors.append(FormalError(statement, FormalErrorKind.UNKNOWN_OPERATOR,
                              f"'{op}' is not a recognized operator"))
    return None


def _check_link_target(target: str, statement: str, nodes: dict[str, AtomicNode],
                       errors: list[FormalError]) -> bool:
    declared = nodes.get(target)
    if declared is None:
        errors.append(FormalError(statement, FormalErrorKind.UNDECLARED_NODE,
                                  f"'{target}' is not a declared node"))
        return False
    if declared.kind is NodeKind.CONDITION:
        errors.append(FormalError(statement, FormalErrorKind.CONDITION_AS_EFFECT,
                                  f"condition '{target}' used as a link target"))
        return False
    return True


def check_formal(raw_statements: Sequence[str], nodes: dict[str, AtomicNode]) -> list[FormalError]:
    """Validate raw statements against the operator grammar; one error per violation.

    Statements that cannot even be tokenized are reported as UnknownOperator
    errors with a syntax detail rather than raised, so healing loops can feed
    them back to the reconstruction step.
    """
    errors: list[FormalError] = []
    link_targets: dict[str, str] = {}
    for text in raw_statements:
        try:
            raw = _parse_statement(text)
        except DslSyntaxError as exc:
            errors.append(FormalError(text, FormalErrorKind.UNKNOWN_OPERATOR,
                                      f"syntax error: {exc.message}"))
            continue
        typed = _check_statement(raw, nodes, errors)
        if isinstance(typed, CausalLink):
            first = link_targets.get(typed.effect)
            if first is not None:
                errors.append(FormalError(
                    text, FormalErrorKind.DUPLICATE_EFFECT_LINK,
                    f"effect '{typed.effect}' already linked by '{first}'"))
            else:
                link_targets[typed.effect] = text
    return errors


def _merge_or(existing: CauseExpr, new: CauseExpr) -> CauseExpr:
    left = list(existing.operands) if isinstance(existing, Or) else [existing]
    right = list(new.operands) if isinstance(new, Or) else [new]
    merged: list[CauseExpr] = []
    for part in left + right:
        if part not in merged:
            merged.append(part)
    if len(merged) == 1:
        return merged[0]
    return Or(tuple(merged))


def parse_ceg(source: str) -> CausalEffectGraph:
    """Parse DSL text into a graph.

    Declarations come first in any order; statements follow. Formally invalid
    statements are preserved in raw_statements (for check_formal) but excluded
    from the typed graph. Several links naming the same effect are canonically
    merged into one OR link, with a note in the parse log.
    """
    nodes: dict[str, AtomicNode] = {}
    statement_lines: list[tuple[int, str]] = []
    for n, raw_line in enumerate(source.replace("\r\n", "\n").split("\n"), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        decl = _DECL_RE.match(line)
        if decl and "(" not in decl.group(1):
            node_id, description = decl.group(1), decl.group(2).strip()
            if not NODE_ID_RE.match(node_id):
                raise DslSyntaxError(f"invalid node id '{node_id}'", n)
            if not description:
                raise DslSyntaxError(f"declaration '{node_id}' has no description", n)
            if node_id in nodes:
                raise DslSyntaxError(f"duplicate declaration of '{node_id}'", n)
            nodes[node_id] = AtomicNode(node_id, kind_for_id(node_id), description)
            continue
        statement_lines.append((n, line))

    errors: list[FormalError] = []
    log: list[str] = []
    links: dict[str, CauseExpr] = {}
    link_order: list[str] = []
    constraints: list[Constraint] = []
    restrictions: list[Restriction] = []
    raw_statements: list[str] = []
    for n, text in statement_lines:
        raw = _parse_statement(text, n)  # raises DslSyntaxError on malformed lines
        raw_statements.append(text)
        typed = _check_statement(raw, nodes, errors)
        if typed is None:
            continue
        if isinstance(typed, CausalLink):
            if typed.effect in links:
                merged = _merge_or(links[typed.effect], typed.cause)
                links[typed.effect] = merged
                log.append(
                    f"merged duplicate links for {typed.effect} into "
                    f"{CausalLink(merged, typed.effect).statement_text()}"
                )
            else:
                links[typed.effect] = typed.cause
                link_order.append(typed.effect)
        elif isinstance(typed, Constraint):
            if typed not in constraints:
                constraints.append(typed)
        else:
            if typed not in restrictions:
                restrictions.append(typed)
    if errors:
        log.append(f"{len(errors)} formally invalid statement(s) excluded from the typed graph")
    return CausalEffectGraph(
        nodes=tuple(sorted(nodes.values(), key=lambda a: a.id)),
        links=tuple(CausalLink(links[e], e) for e in link_order),
        constraints=tuple(constraints),
        restrictions=tuple(restrictions),
        raw_statements=tuple(raw_statements),
        parse_log=tuple(log),
    )


def compose_source(atoms: Sequence[AtomicNode], statements: Sequence[str]) -> str:
    """Build DSL text from declared atoms plus statement lines."""
    decls = [f"{a.id}: {a.description}" for a in
             sorted(atoms, key=lambda a: (a.kind is not NodeKind.CONDITION, a.id))]
    return "\n".join(decls + [s for s in statements]) + "\n"


def serialize_ceg(graph: CausalEffectGraph) -> str:
    """Canonical DSL text: declarations, then links, constraints, restrictions, sorted."""
    out: list[str] = []
    for node in sorted(graph.nodes, key=lambda a: (a.kind is not NodeKind.CONDITION, a.id)):
        out.append(f"{node.id}: {node.description}")
    out.extend(graph.statement_texts())
    return "\n".join(out) + "\n"
