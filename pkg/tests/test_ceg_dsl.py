"""Unit tests for the causal-graph DSL: parsing and the formal checker."""

from __future__ import annotations

import random

import pytest

from helpers import random_graph
from requireceg.ceg.dsl import (
    FormalErrorKind,
    check_formal,
    compose_source,
    parse_ceg,
    serialize_ceg,
)
from requireceg.ceg.model import And, Atom, ConstraintOp, Or
from requireceg.errors import DslSyntaxError

DECLS = """
C1: the character in column 1 is A
C2: the character in column 1 is B
C3: the character in column 2 is a number
E1: the file update is complete
E2: prints the message x
E3: prints the message y
"""


def graph_for(*statements):
    return parse_ceg(DECLS + "\n".join(statements))


def kinds_for(*statements):
    graph = graph_for()
    return [e.kind for e in check_formal(list(statements), graph.node_map)]


class TestParse:
    def test_nested_link(self):
        graph = graph_for("AND(OR(C1,C2),C3)=E1")
        assert len(graph.links) == 1
        link = graph.links[0]
        assert link.effect == "E1"
        assert isinstance(link.cause, And)
        assert isinstance(link.cause.operands[0], Or)
        assert link.statement_text() == "AND(OR(C1,C2),C3)=E1"

    def test_constraint(self):
        graph = graph_for("EXC(C1,C2)")
        assert len(graph.constraints) == 1
        assert graph.constraints[0].op is ConstraintOp.EXC

    def test_unbalanced_parenthesis(self):
        with pytest.raises(DslSyntaxError):
            graph_for("AND(C1,C2")

    def test_unknown_token(self):
        with pytest.raises(DslSyntaxError):
            graph_for("AND(C1,C2)=E1 %")

    def test_invalid_statements_are_kept_raw(self):
        graph = graph_for("DIR(E1)=E2", "DIR(C1)=E1")
        assert "DIR(E1)=E2" in graph.raw_statements
        assert [l.effect for l in graph.links] == ["E1"]
        assert any("invalid" in note for note in graph.parse_log)

    def test_duplicate_links_merge_to_or(self):
        graph = graph_for("DIR(C3)=E3", "DIR(C1)=E3")
        assert [l.statement_text() for l in graph.links] == ["OR(C3,C1)=E3"]
        assert any("merged" in note for note in graph.parse_log)

    def test_identical_duplicate_links_collapse(self):
        graph = graph_for("DIR(C3)=E3", "DIR(C3)=E3")
        assert [l.statement_text() for l in graph.links] == ["DIR(C3)=E3"]

    def test_bare_link_shorthand(self):
        graph = graph_for("C1=E1")
        assert graph.links[0].cause == Atom("C1")

    def test_dir_unwraps(self):
        graph = graph_for("DIR(C1)=E1")
        assert graph.links[0].cause == Atom("C1")

    def test_duplicate_declaration_rejected(self):
        with pytest.raises(DslSyntaxError):
            parse_ceg("C1: one\nC1: two")

    def test_comments_and_blanks_ignored(self):
        graph = parse_ceg("# comment\nC1: a\n\nE1: b\nDIR(C1)=E1\n")
        assert len(graph.links) == 1


class TestCheckFormal:
    def test_effect_as_cause(self):
        assert kinds_for("DIR(E1)=E2") == [FormalErrorKind.EFFECT_AS_CAUSE]

    def test_equals_in_constraint(self):
        assert kinds_for("EXC(C1,C2)=E1") == [FormalErrorKind.EQUALS_IN_CONSTRAINT]

    def test_unary_and_is_arity_mismatch(self):
        assert kinds_for("AND(C1)=E1") == [FormalErrorKind.ARITY_MISMATCH]

    def test_unknown_operator(self):
        assert kinds_for("IMPLIES(C1,C2)=E1") == [FormalErrorKind.UNKNOWN_OPERATOR]

    def test_undeclared_node(self):
        assert kinds_for("DIR(C9)=E1") == [FormalErrorKind.UNDECLARED_NODE]

    def test_condition_as_effect(self):
        assert kinds_for("DIR(C1)=C2") == [FormalErrorKind.CONDITION_AS_EFFECT]

    def test_msk_requires_effects(self):
        assert kinds_for("MSK(C1,E1)") == [FormalErrorKind.CONDITION_AS_EFFECT]

    def test_constraint_requires_conditions(self):
        assert kinds_for("REQ(C1,E1)") == [FormalErrorKind.EFFECT_AS_CAUSE]

    def test_duplicate_effect_link(self):
        kinds = kinds_for("DIR(C1)=E1", "DIR(C2)=E1")
        assert kinds == [FormalErrorKind.DUPLICATE_EFFECT_LINK]

    def test_nested_constraint_in_cause(self):
        assert kinds_for("AND(EXC(C1,C2),C3)=E1") == [FormalErrorKind.UNKNOWN_OPERATOR]

    def test_link_without_target(self):
        assert kinds_for("AND(C1,C2)") == [FormalErrorKind.ARITY_MISMATCH]

    def test_bare_identifier(self):
        assert kinds_for("C1") == [FormalErrorKind.UNKNOWN_OPERATOR]

    def test_syntax_garbage_reported_not_raised(self):
        errors = check_formal(["AND(C1,"], graph_for().node_map)
        assert errors[0].kind is FormalErrorKind.UNKNOWN_OPERATOR
        assert "syntax" in errors[0].detail

    def test_multiple_errors_in_one_statement(self):
        errors = check_formal(["XOR(E1,C9)"], graph_for().node_map)
        kinds = {e.kind for e in errors}
        assert FormalErrorKind.EFFECT_AS_CAUSE in kinds
        assert FormalErrorKind.UNDECLARED_NODE in kinds

    def test_clean_statements_have_no_errors(self):
        statements = ["AND(OR(C1,C2),C3)=E1", "NOT(C3)=E3", "NOT(OR(C1,C2))=E2",
                      "EXC(C1,C2)", "MSK(E1,E2)"]
        assert check_formal(statements, graph_for().node_map) == []


class TestCanonicalForm:
    def test_serialize_then_parse_is_stable(self):
        graph = graph_for("AND(OR(C1,C2),C3)=E1", "NOT(C3)=E3", "EXC(C1,C2)",
                          "MSK(E1,E2)")
        again = parse_ceg(serialize_ceg(graph))
        assert again.nodes == graph.nodes
        assert again.links == graph.links
        assert again.constraints == graph.constraints
        assert again.restrictions == graph.restrictions

    def test_symmetric_constraints_normalize(self):
        graph = graph_for("EXC(C2,C1)")
        assert graph.constraints[0].statement_text() == "EXC(C1,C2)"

    def test_req_keeps_order(self):
        graph = graph_for("REQ(C2,C1)")
        assert graph.constraints[0].statement_text() == "REQ(C2,C1)"

    def test_random_graphs_round_trip(self):
        rng = random.Random(7)
        for _ in range(40):
            graph = random_graph(rng)
            rebuilt = parse_ceg(compose_source(graph.nodes, graph.statement_texts()))
            assert rebuilt.links == tuple(sorted(graph.links, key=lambda l: l.effect))
            assert set(rebuilt.constraints) == set(graph.constraints)
            assert set(rebuilt.restrictions) == set(graph.restrictions)

    def test_check_formal_soundness(self):
        # Zero formal errors must imply the statements parse into a typed
        # graph satisfying every structural invariant.
        rng = random.Random(11)
        for _ in range(40):
            graph = random_graph(rng)
            statements = list(graph.statement_texts())
            node_map = {n.id: n for n in graph.nodes}
            assert check_formal(statements, node_map) == []
            parse_ceg(compose_source(graph.nodes, statements))
