"""Unit tests for the lint rule registry and syntax accuracy."""

from __future__ import annotations

from fractions import Fraction

import pytest

from requireceg.errors import EmptyCorpus, ParseError
from requireceg.gherkin.ast import parse_feature
from requireceg.gherkin.lint import RULES, acc_syn, lint

CLEAN = "Feature: X\n\n  Scenario: S\n    Given a\n    When b\n    Then c\n"
MULTILINE = ("Feature: X\n\n  Scenario: S\n    Given a step\n"
             "      that continues on a second line\n    Then done\n")


def rule_ids(source):
    return {f.rule_id for f in lint(source)}


class TestRules:
    def test_registry_is_unique_and_complete(self):
        ids = [rule.rule_id for rule in RULES]
        assert len(ids) == len(set(ids)) == 12
        assert "no-multiline-steps" in ids
        assert "no-files-without-scenarios" in ids

    def test_clean_file_has_no_findings(self):
        assert lint(CLEAN) == []

    def test_multiline_step(self):
        assert "no-multiline-steps" in rule_ids(MULTILINE)

    def test_feature_without_scenarios(self):
        assert "no-files-without-scenarios" in rule_ids("Feature: X\n")

    def test_missing_feature_header(self):
        assert "missing-feature-header" in rule_ids("Scenario: S\n  Given a\n")

    def test_empty_scenario(self):
        assert "no-empty-scenario" in rule_ids("Feature: X\nScenario: S\nScenario: T\n  Given a\n")

    def test_duplicate_scenario_names(self):
        source = ("Feature: X\nScenario: S\n  Given a\nScenario: S\n  Given b\n")
        assert "no-duplicate-scenario-names" in rule_ids(source)

    def test_keyword_order(self):
        assert "keyword-order" in rule_ids("Feature: X\nScenario: S\n  When b\n  Given a\n")

    def test_and_without_antecedent(self):
        assert "and-without-antecedent" in rule_ids("Feature: X\nScenario: S\n  And a\n")

    def test_outline_without_examples(self):
        assert "outline-without-examples" in rule_ids(
            "Feature: X\nScenario Outline: S\n  Given <a>\n")

    def test_examples_column_mismatch(self):
        source = ("Feature: X\nScenario Outline: S\n  Given <a>\n  Examples:\n"
                  "    | a |\n    | 1 | 2 |\n")
        assert "examples-column-mismatch" in rule_ids(source)

    def test_trailing_whitespace(self):
        assert "no-trailing-whitespace" in rule_ids(CLEAN.replace("Given a", "Given a "))

    def test_one_feature_per_file(self):
        assert "one-feature-per-file" in rule_ids(CLEAN + "\nFeature: Y\n")

    def test_indentation_consistency(self):
        source = "Feature: X\nScenario: S\n    Given a\n  When b\n    Then c\n"
        assert "indentation-consistency" in rule_ids(source)

    def test_unexpected_error_for_parse_failures(self):
        findings = lint("Scenario: S\n  Given a\n")
        assert any(f.rule_id == "unexpected-error" for f in findings)

    def test_findings_sorted_by_location(self):
        findings = lint(MULTILINE + "Feature: Y\n")
        assert [(f.line, f.column) for f in findings] == sorted(
            (f.line, f.column) for f in findings)

    def test_finding_serialization(self):
        finding = lint(MULTILINE)[0]
        record = finding.to_dict()
        assert set(record) == {"rule_id", "line", "column", "message"}


class TestParserConsistency:
    @pytest.mark.parametrize("source", [
        "Scenario: S\nGiven a\n",
        "Feature: X\nScenario: S\nAnd a\n",
        "Feature: X\nGiven early\n",
        MULTILINE,
        "Feature: X\nScenario Outline: S\nGiven <a>\n",
    ])
    def test_rejected_sources_have_findings(self, source):
        with pytest.raises(ParseError):
            parse_feature(source)
        assert lint(source)

    def test_lint_is_deterministic(self):
        assert lint(MULTILINE) == lint(MULTILINE)


class TestAccSyn:
    def test_all_clean(self):
        assert acc_syn([CLEAN, CLEAN]).value == 1

    def test_half_clean(self):
        result = acc_syn([CLEAN, MULTILINE])
        assert result.value == Fraction(1, 2)
        assert result.clean_files == 1
        assert result.total_files == 2

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            acc_syn([])

    def test_exact_ratio(self):
        files = [CLEAN] * 6 + [MULTILINE]
        assert acc_syn(files).value == Fraction(6, 7)

    def test_monotonicity(self):
        base = [CLEAN, MULTILINE]
        with_clean = acc_syn(base + [CLEAN])
        with_dirty = acc_syn(base + [MULTILINE])
        baseline = acc_syn(base)
        assert with_clean.value >= baseline.value
        assert with_dirty.value <= baseline.value
