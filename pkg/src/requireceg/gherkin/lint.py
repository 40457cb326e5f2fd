"""Rule-based syntax and style validation of feature files.

Linting is tolerant: it accepts arbitrary text (including files the parser
rejects) and reports findings instead of raising. Any source the parser
rejects additionally yields an "unexpected-error" finding, so the lint
verdict is never more permissive than the parser.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from ..errors import EmptyCorpus, ParseError
from .ast import parse_feature

_STEP_RE = re.compile(r"^(Given|When|Then|And|But)\b")
_ORDER = {"Given": 0, "When": 1, "Then": 2}


@dataclass(frozen=True)
class LintRule:
    rule_id: str
    severity: str
    description: str


RULES: tuple[LintRule, ...] = (
    LintRule("no-multiline-steps", "Error", "A step must fit on one physical line"),
    LintRule("no-files-without-scenarios", "Error", "A feature must declare at least one scenario"),
    LintRule("missing-feature-header", "Error", "The first content line must be a Feature header"),
    LintRule("no-empty-scenario", "Error", "A scenario must contain at least one step"),
    LintRule("indentation-consistency", "Error", "Steps in a block must share one indentation"),
    LintRule("no-duplicate-scenario-names", "Error", "Scenario titles must be unique in a file"),
    LintRule("keyword-order", "Error", "Steps must follow Given, then When, then Then"),
    LintRule("and-without-antecedent", "Error", "And/But must follow a Given, When, or Then"),
    LintRule("outline-without-examples", "Error", "A Scenario Outline must have an Examples block"),
    LintRule("examples-column-mismatch", "Error", "Examples rows must match the header width"),
    LintRule("no-trailing-whitespace", "Error", "Lines must not end with spaces or tabs"),
    LintRule("one-feature-per-file", "Error", "A file must contain exactly one Feature"),
)

RULE_IDS = {rule.rule_id for rule in RULES}


@dataclass(frozen=True)
class LintFinding:
    rule_id: str
    line: int
    column: int
    message: str

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "line": self.line,
            "column": self.column,
            "message": self.message,
        }


@dataclass(frozen=True)
class SyntaxAccuracy:
    total_files: int
    clean_files: int
    value: Fraction

    def to_dict(self) -> dict:
        return {
            "total_files": self.total_files,
            "clean_files": self.clean_files,
            "value": float(self.value),
            "value_exact": f"{self.value.numerator}/{self.value.denominator}",
        }


class _Scanner:
    """Line-oriented rule scanner that never raises."""

    def __init__(self, source: str):
        self.lines = source.replace("\r\n", "\n").replace("\r", "\n").split("\n")
        self.findings: list[LintFinding] = []

    def add(self, rule_id: str, line: int, column: int, message: str) -> None:
        self.findings.append(LintFinding(rule_id, line, column, message))

    def scan(self) -> list[LintFinding]:
        feature_line = 0
        feature_count = 0
        scenario_count = 0
        first_content_checked = False
        seen_titles: dict[str, int] = {}
        ctx = "start"  # start | feature_head | background | scenario | examples
        block_header_line = 0
        block_is_outline = False
        block_has_examples = False
        block_step_count = 0
        block_step_indent: int | None = None
        last_primary: str | None = None
        prev_steplike = False
        ex_header_len: int | None = None

        def close_block(at_line: int) -> None:
            nonlocal block_is_outline, block_has_examples, block_step_count
            if ctx in ("scenario", "examples"):
                if block_step_count == 0:
                    self.add("no-empty-scenario", block_header_line, 1,
                             "scenario has no steps")
                if block_is_outline and not block_has_examples:
                    self.add("outline-without-examples", block_header_line, 1,
                             "Scenario Outline has no Examples block")

        for n, raw in enumerate(self.lines, start=1):
            if raw != raw.rstrip():
                self.add("no-trailing-whitespace", n, len(raw.rstrip()) + 1,
                         "trailing whitespace")
            stripped = raw.strip()
            indent = len(raw) - len(raw.lstrip())
            if not stripped or stripped.startswith("#") or stripped.startswith("@"):
                continue
            if not first_content_checked:
                first_content_checked = True
                if not stripped.startswith("Feature:"):
                    self.add("missing-feature-header", n, indent + 1,
                             "first content line is not a Feature header")
            if stripped.startswith("Feature:"):
                feature_count += 1
                if feature_count == 1:
                    feature_line = n
                else:
                    self.add("one-feature-per-file", n, indent + 1,
                             "more than one Feature in this file")
                prev_steplike = False
                continue
            if stripped.startswith("Background:"):
                close_block(n)
                ctx = "background"
                block_header_line = n
                block_is_outline = False
                block_has_examples = False
                block_step_count = 0
                block_step_indent = None
                last_primary = None
                prev_steplike = False
                continue
            if stripped.startswith("Scenario Outline:") or stripped.startswith("Scenario:"):
                close_block(n)
                outline = stripped.startswith("Scenario Outline:")
                header = "Scenario Outline:" if outline else "Scenario:"
                title = stripped[len(header):].strip()
                scenario_count += 1
                if title in seen_titles:
                    self.add("no-duplicate-scenario-names", n, indent + 1,
                             f"duplicate scenario title '{title}'")
                else:
                    seen_titles[title] = n
                ctx = "scenario"
                block_header_line = n
                block_is_outline = outline
                block_has_examples = False
                block_step_count = 0
                block_step_indent = None
                last_primary = None
                prev_steplike = False
                continue
            if stripped.startswith("Examples:"):
                if ctx in ("scenario", "examples"):
                    block_has_examples = True
                ctx = "examples"
                ex_header_len = None
                prev_steplike = False
                continue
            if stripped.startswith("|"):
                if ctx == "examples":
                    cells = stripped.strip("|").split("|") if len(stripped) > 1 else []
                    if ex_header_len is None:
                        ex_header_len = len(cells)
                    elif len(cells) != ex_header_len:
                        self.add("examples-column-mismatch", n, indent + 1,
                                 f"row has {len(cells)} cells, expected {ex_header_len}")
                prev_steplike = True
                continue
            step = _STEP_RE.match(stripped)
            if step:
                keyword = step.group(1)
                if ctx in ("background", "scenario"):
                    block_step_count += 1
                    if block_step_indent is None:
                        block_step_indent = indent
                    elif indent != block_step_indent:
                        self.add("indentation-consistency", n, indent + 1,
                                 f"step indented {indent}, block uses {block_step_indent}")
                    if keyword in ("And", "But"):
                        if last_primary is None:
                            self.add("and-without-antecedent", n, indent + 1,
                                     f"'{keyword}' has no preceding Given/When/Then")
                    else:
                        if last_primary is not None and _ORDER[keyword] < _ORDER[last_primary]:
                            self.add("keyword-order", n, indent + 1,
                                     f"'{keyword}' after '{last_primary}'")
                        last_primary = keyword
                prev_steplike = True
                continue
            # Unclassifiable content line.
            if ctx in ("background", "scenario", "examples") and prev_steplike:
                self.add("no-multiline-steps", n, indent + 1,
                         "step text spans more than one line")
            prev_steplike = ctx in ("background", "scenario", "examples")
        close_block(len(self.lines))
        if feature_count >= 1 and scenario_count == 0:
            self.add("no-files-without-scenarios", feature_line or 1, 1,
                     "feature declares no scenarios")
        return self.findings


def lint(source: str) -> list[LintFinding]:
    """Run every registered rule over the source; failures are findings, not errors."""
    findings = _Scanner(source).scan()
    try:
        parse_feature(source)
    except ParseError as exc:
        findings.append(LintFinding("unexpected-error", exc.line, exc.column, exc.message))
    findings.sort(key=lambda f: (f.line, f.column, f.rule_id))
    return findings


def acc_syn(sources: list[str]) -> SyntaxAccuracy:
    """Fraction of source files with zero lint findings, as an exact ratio."""
    if not sources:
        raise EmptyCorpus("acc_syn requires at least one source file")
    clean = sum(1 for source in sources if not lint(source))
    return SyntaxAccuracy(
        total_files=len(sources),
        clean_files=clean,
        value=Fraction(clean, len(sources)),
    )
