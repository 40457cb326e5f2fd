"""Unit tests for the Gherkin parser, serializer, and keyword statistics."""

from __future__ import annotations

import pytest

from requireceg.errors import InvariantError, ParseError
from requireceg.gherkin.ast import (
    GherkinDocument,
    Scenario,
    ScenarioKind,
    StepKind,
    count_physical_lines,
    keyword_stats,
    parse_feature,
    serialize,
)


class TestParseBasics:
    def test_minimal_file(self, minimal_feature):
        doc = parse_feature(minimal_feature)
        assert doc.feature_title == "X"
        assert len(doc.scenarios) == 1
        kinds = [s.resolved_kind for s in doc.scenarios[0].steps]
        assert kinds == [StepKind.PRECONDITION, StepKind.TRIGGER, StepKind.ACTION]

    def test_template_file(self, fixtures_dir):
        doc = parse_feature((fixtures_dir / "corpus" / "c01.feature").read_text("utf-8"))
        assert doc.narrative is not None
        assert doc.narrative.role == "a young explorer"
        assert len(doc.background) == 2
        assert [s.kind for s in doc.scenarios] == [ScenarioKind.PLAIN, ScenarioKind.OUTLINE]
        outline = doc.scenarios[1]
        assert outline.examples is not None
        assert outline.examples.headers == ("something", "number", "thing")
        assert len(outline.examples.rows) == 2

    def test_missing_feature_header(self):
        with pytest.raises(ParseError) as exc:
            parse_feature("Scenario: S\nGiven a")
        assert "Feature" in exc.value.message
        assert exc.value.line == 1

    def test_and_without_antecedent(self):
        with pytest.raises(ParseError) as exc:
            parse_feature("Feature: X\nScenario: S\nAnd lonely")
        assert exc.value.line == 3

    def test_step_before_scenario(self):
        with pytest.raises(ParseError):
            parse_feature("Feature: X\nGiven early")

    def test_malformed_table_row(self):
        text = ("Feature: X\nScenario Outline: S\nGiven <a>\n"
                "Examples:\n| a |\n| 1 | 2 |\n")
        with pytest.raises(ParseError) as exc:
            parse_feature(text)
        assert "cells" in exc.value.message

    def test_keyword_regression_rejected(self):
        with pytest.raises(ParseError):
            parse_feature("Feature: X\nScenario: S\nWhen b\nGiven a")

    def test_placeholder_must_be_declared(self):
        text = ("Feature: X\nScenario Outline: S\nGiven <missing>\n"
                "Examples:\n| present |\n| 1 |\n")
        with pytest.raises(ParseError) as exc:
            parse_feature(text)
        assert "missing" in exc.value.message

    def test_outline_requires_examples(self):
        with pytest.raises(ParseError):
            parse_feature("Feature: X\nScenario Outline: S\nGiven <a>")

    def test_crlf_accepted(self):
        doc = parse_feature("Feature: X\r\nScenario: S\r\nGiven a\r\n")
        assert doc.scenarios[0].steps[0].text == "a"

    def test_and_but_inherit_kind(self):
        doc = parse_feature(
            "Feature: X\nScenario: S\nGiven a\nAnd b\nWhen c\nThen d\nBut e")
        kinds = [s.resolved_kind for s in doc.scenarios[0].steps]
        assert kinds == [StepKind.PRECONDITION, StepKind.PRECONDITION,
                         StepKind.TRIGGER, StepKind.ACTION, StepKind.ACTION]

    def test_tags_and_comments_preserved(self):
        text = ("# header note\n@a @b\nFeature: X\n\n"
                "# about S\n@fast\nScenario: S\n# before step\nGiven a\n"
                "# closing remark\n")
        doc = parse_feature(text)
        assert doc.tags == ("@a", "@b")
        assert doc.comments == ("header note",)
        assert doc.scenarios[0].tags == ("@fast",)
        assert doc.scenarios[0].comments == ("about S",)
        assert doc.scenarios[0].steps[0].comments == ("before step",)
        assert doc.trailing_comments == ("closing remark",)

    def test_background_only_given(self):
        with pytest.raises(ParseError):
            parse_feature("Feature: X\nBackground:\nWhen early\nScenario: S\nGiven a")

    def test_tags_rejected_on_examples(self):
        text = ("Feature: X\nScenario Outline: S\nGiven <a>\n"
                "@tagged\nExamples:\n| a |\n| 1 |\n")
        with pytest.raises(ParseError):
            parse_feature(text)


class TestSerialize:
    def test_round_trip_minimal(self, minimal_feature):
        doc = parse_feature(minimal_feature)
        assert parse_feature(serialize(doc)) == doc

    def test_round_trip_corpus(self, corpus_sources):
        for source in corpus_sources:
            doc = parse_feature(source)
            assert parse_feature(serialize(doc)) == doc

    def test_outline_serialization_markers(self, fixtures_dir):
        doc = parse_feature((fixtures_dir / "corpus" / "c01.feature").read_text("utf-8"))
        text = serialize(doc)
        assert "Scenario Outline:" in text
        assert "Examples:" in text

    def test_serializer_refuses_empty_scenarios(self):
        doc = GherkinDocument(feature_title="X")
        with pytest.raises(InvariantError):
            serialize(doc)

    def test_serializer_refuses_stepless_scenario(self):
        scenario = Scenario(title="S", kind=ScenarioKind.PLAIN, steps=())
        doc = GherkinDocument(feature_title="X", scenarios=(scenario,))
        with pytest.raises(InvariantError):
            serialize(doc)

    def test_lf_endings_and_two_space_nesting(self, minimal_feature):
        text = serialize(parse_feature(minimal_feature))
        assert "\r" not in text
        assert "  Scenario: S\n" in text
        assert "    Given a\n" in text


class TestKeywordStats:
    def test_single_file_counts(self):
        source = "Feature: F\n\nScenario: A\nGiven a\nWhen b\nThen c\n\nScenario: B\nGiven d\nWhen e\n"
        doc = parse_feature(source)
        ten_lines = "1\n2\n3\n4\n5\n6\n7\n8\n9\n10"
        stats = keyword_stats([doc], [ten_lines])
        assert stats.f_num == 1
        assert stats.avg_loc == 10
        assert stats.f_sce == 2

    def test_literal_keyword_tokens(self):
        doc = parse_feature("Feature: X\nScenario: S\nGiven a\nAnd b\nWhen c\nThen d")
        stats = keyword_stats([doc], ["x"])
        assert (stats.key_given, stats.key_when, stats.key_then) == (1, 1, 1)

    def test_per_feature_scenario_mean(self):
        two = parse_feature("Feature: A\nScenario: 1\nGiven a\nScenario: 2\nGiven a")
        four = parse_feature(
            "Feature: B\n" + "".join(f"Scenario: {i}\nGiven a\n" for i in range(4)))
        stats = keyword_stats([two, four], ["x", "y"])
        assert stats.f_sce == 3.0

    def test_background_counts_toward_given(self):
        doc = parse_feature("Feature: X\nBackground:\nGiven base\nScenario: S\nGiven a")
        stats = keyword_stats([doc], ["x"])
        assert stats.key_given == 2

    def test_examples_keyword_count(self, fixtures_dir):
        doc = parse_feature((fixtures_dir / "corpus" / "c01.feature").read_text("utf-8"))
        stats = keyword_stats([doc], ["x"])
        assert stats.key_examples == 1

    def test_empty_inputs(self):
        stats = keyword_stats([], [])
        assert stats.f_num == 0
        assert stats.avg_loc == 0.0


class TestPhysicalLines:
    @pytest.mark.parametrize("text,count", [
        ("", 0),
        ("a", 1),
        ("a\n", 1),
        ("a\nb", 2),
        ("a\n\nb\n", 3),
        ("a\r\nb\r\n", 2),
    ])
    def test_counting(self, text, count):
        assert count_physical_lines(text) == count
