"""Gherkin feature-file model: parsing, serialization, and keyword statistics.

The grammar accepted here is the classic feature template: a Feature header,
an optional narrative ("As a / I want / So that"), an optional Background of
shared Given steps, and a list of Scenarios or Scenario Outlines whose steps
follow the Given* When* Then* order (And/But attach to the most recent
primary keyword). Comments and tags are preserved as metadata attached to
the following element. English keywords only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from ..errors import InvariantError, ParseError


class StepKeyword(str, Enum):
    GIVEN = "Given"
    WHEN = "When"
    THEN = "Then"
    AND = "And"
    BUT = "But"


class StepKind(str, Enum):
    PRECONDITION = "Precondition"
    TRIGGER = "Trigger"
    ACTION = "Action"


class ScenarioKind(str, Enum):
    PLAIN = "Plain"
    OUTLINE = "Outline"


PRIMARY_KIND = {
    StepKeyword.GIVEN: StepKind.PRECONDITION,
    StepKeyword.WHEN: StepKind.TRIGGER,
    StepKeyword.THEN: StepKind.ACTION,
}

_KEYWORD_ORDER = {StepKeyword.GIVEN: 0, StepKeyword.WHEN: 1, StepKeyword.THEN: 2}

_STEP_RE = re.compile(r"^(Given|When|Then|And|But)\b\s*(.*)$")
_PLACEHOLDER_RE = re.compile(r"<([^<>]+)>")


@dataclass(frozen=True)
class Step:
    keyword: StepKeyword
    resolved_kind: StepKind
    text: str
    comments: tuple[str, ...] = ()

    def render(self) -> str:
        return f"{self.keyword.value} {self.text}".rstrip()


@dataclass(frozen=True)
class ExamplesTable:
    headers: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    comments: tuple[str, ...] = ()


@dataclass(frozen=True)
class NarrativeBlock:
    role: str
    want: str
    benefit: str


@dataclass(frozen=True)
class Scenario:
    title: str
    kind: ScenarioKind
    steps: tuple[Step, ...]
    examples: Optional[ExamplesTable] = None
    tags: tuple[str, ...] = ()
    comments: tuple[str, ...] = ()

    def placeholders(self) -> set[str]:
        found: set[str] = set()
        for step in self.steps:
            found.update(_PLACEHOLDER_RE.findall(step.text))
        return found


@dataclass(frozen=True)
class GherkinDocument:
    feature_title: str
    narrative: Optional[NarrativeBlock] = None
    background: tuple[Step, ...] = ()
    scenarios: tuple[Scenario, ...] = ()
    source_path: Optional[str] = field(default=None, compare=False)
    tags: tuple[str, ...] = ()
    comments: tuple[str, ...] = ()
    description: tuple[str, ...] = ()
    trailing_comments: tuple[str, ...] = ()


@dataclass(frozen=True)
class KeywordStats:
    f_num: int
    avg_loc: float
    f_sce: float
    key_given: int
    key_when: int
    key_then: int
    key_examples: int

    def to_dict(self) -> dict:
        return {
            "f_num": self.f_num,
            "avg_loc": self.avg_loc,
            "f_sce": self.f_sce,
            "key_given": self.key_given,
            "key_when": self.key_when,
            "key_then": self.key_then,
            "key_examples": self.key_examples,
        }


class _Parser:
    """Single-pass line parser producing a GherkinDocument."""

    def __init__(self, source: str, source_path: Optional[str]):
        self.lines = source.replace("\r\n", "\n").replace("\r", "\n").split("\n")
        self.source_path = source_path
        self.feature_title: Optional[str] = None
        self.feature_tags: tuple[str, ...] = ()
        self.feature_comments: tuple[str, ...] = ()
        self.narrative_parts: dict[str, str] = {}
        self.narrative_label_seen = False
        self.description: list[str] = []
        self.background: list[Step] = []
        self.background_seen = False
        self.scenarios: list[Scenario] = []
        self.pending_comments: list[str] = []
        self.pending_tags: list[str] = []
        self.state = "start"  # start | feature_head | background | scenario
        self.last_primary: Optional[StepKeyword] = None
        self.cur: Optional[dict] = None
        self.in_examples = False
        self.ex_headers: Optional[tuple[str, ...]] = None
        self.ex_rows: list[tuple[str, ...]] = []
        self.ex_comments: tuple[str, ...] = ()

    def error(self, message: str, line_no: int, column: int = 1) -> ParseError:
        return ParseError(message, line_no, column)

    def parse(self) -> GherkinDocument:
        for idx, raw in enumerate(self.lines, start=1):
            self._line(raw, idx)
        self._close_scenario(len(self.lines))
        if self.pending_tags:
            raise self.error("dangling tags at end of file", len(self.lines))
        narrative = self._finish_narrative(len(self.lines))
        if self.feature_title is None:
            raise self.error("missing Feature header", 1)
        return GherkinDocument(
            feature_title=self.feature_title,
            narrative=narrative,
            background=tuple(self.background),
            scenarios=tuple(self.scenarios),
            source_path=self.source_path,
            tags=self.feature_tags,
            comments=self.feature_comments,
            description=tuple(self.description),
            trailing_comments=tuple(self.pending_comments),
        )

    def _line(self, raw: str, n: int) -> None:
        stripped = raw.strip()
        column = len(raw) - len(raw.lstrip()) + 1
        if not stripped:
            return
        if stripped.startswith("#"):
            self.pending_comments.append(stripped[1:].strip())
            return
        if stripped.startswith("@"):
            tags = stripped.split()
            if not all(t.startswith("@") for t in tags):
                raise self.error("malformed tag line", n, column)
            self.pending_tags.extend(tags)
            return
        if stripped.startswith("Feature:"):
            if self.feature_title is not None:
                raise self.error("more than one Feature header", n, column)
            title = stripped[len("Feature:"):].strip()
            if not title:
                raise self.error("empty feature title", n, column)
            self.feature_title = title
            self.feature_comments = tuple(self.pending_comments)
            self.feature_tags = tuple(self.pending_tags)
            self.pending_comments.clear()
            self.pending_tags.clear()
            self.state = "feature_head"
            return
        if self.feature_title is None:
            raise self.error("missing Feature header", n, column)
        if stripped.startswith("Background:"):
            if self.pending_tags:
                raise self.error("tags are not allowed on Background", n, column)
            if self.background_seen:
                raise self.error("more than one Background block", n, column)
            if self.cur is not None or self.scenarios:
                raise self.error("Background must precede all scenarios", n, column)
            self.background_seen = True
            self.state = "background"
            self.last_primary = None
            return
        if stripped.startswith("Scenario Outline:") or stripped.startswith("Scenario:"):
            self._close_scenario(n)
            outline = stripped.startswith("Scenario Outline:")
            header = "Scenario Outline:" if outline else "Scenario:"
            self.cur = {
                "title": stripped[len(header):].strip(),
                "kind": ScenarioKind.OUTLINE if outline else ScenarioKind.PLAIN,
                "steps": [],
                "tags": tuple(self.pending_tags),
                "comments": tuple(self.pending_comments),
                "line": n,
            }
            self.pending_comments.clear()
            self.pending_tags.clear()
            self.state = "scenario"
            self.last_primary = None
            self.in_examples = False
            return
        if stripped.startswith("Examples:"):
            if self.cur is None or self.cur["kind"] is not ScenarioKind.OUTLINE:
                raise self.error("Examples outside a Scenario Outline", n, column)
            if self.in_examples or self.ex_headers is not None:
                raise self.error("more than one Examples block", n, column)
            if self.pending_tags:
                raise self.error("tags are not allowed on Examples", n, column)
            self.in_examples = True
            self.ex_comments = tuple(self.pending_comments)
            self.pending_comments.clear()
            return
        if stripped.startswith("|"):
            if not self.in_examples:
                raise self.error("unexpected table row", n, column)
            if not stripped.endswith("|") or len(stripped) < 2:
                raise self.error("malformed table row", n, column)
            cells = tuple(c.strip() for c in stripped[1:-1].split("|"))
            if self.ex_headers is None:
                self.ex_headers = cells
            elif len(cells) != len(self.ex_headers):
                raise self.error(
                    f"table row has {len(cells)} cells, expected {len(self.ex_headers)}",
                    n, column,
                )
            else:
                self.ex_rows.append(cells)
            return
        step_match = _STEP_RE.match(stripped)
        if step_match:
            self._step(step_match, n, column)
            return
        if self.state == "feature_head":
            self._feature_head_text(stripped, n, column)
            return
        raise self.error("unexpected line (steps may not span multiple lines)", n, column)

    def _step(self, match: re.Match, n: int, column: int) -> None:
        if self.state not in ("background", "scenario"):
            raise self.error("step before any Scenario or Background", n, column)
        if self.in_examples:
            raise self.error("step after an Examples block", n, column)
        if self.pending_tags:
            raise self.error("tags are not allowed on steps", n, column)
        keyword = StepKeyword(match.group(1))
        text = " ".join(match.group(2).split())
        if keyword in (StepKeyword.AND, StepKeyword.BUT):
            if self.last_primary is None:
                raise self.error(f"'{keyword.value}' has no preceding Given/When/Then", n, column)
            kind = PRIMARY_KIND[self.last_primary]
        else:
            if self.state == "background" and keyword is not StepKeyword.GIVEN:
                raise self.error("Background may contain only Given steps", n, column)
            if (
                self.last_primary is not None
                and _KEYWORD_ORDER[keyword] < _KEYWORD_ORDER[self.last_primary]
            ):
                raise self.error(
                    f"'{keyword.value}' may not follow '{self.last_primary.value}'", n, column
                )
            self.last_primary = keyword
            kind = PRIMARY_KIND[keyword]
        step = Step(keyword, kind, text, comments=tuple(self.pending_comments))
        self.pending_comments.clear()
        if self.state == "background":
            self.background.append(step)
        else:
            assert self.cur is not None
            self.cur["steps"].append(step)

    def _feature_head_text(self, stripped: str, n: int, column: int) -> None:
        if stripped == "Narrative:":
            self.narrative_label_seen = True
            return
        for prefix, key in (("As ", "role"), ("I want ", "want"), ("So that ", "benefit")):
            if stripped.startswith(prefix):
                if key in self.narrative_parts:
                    raise self.error(f"duplicate narrative line '{prefix.strip()}'", n, column)
                value = stripped[len(prefix):].strip()
                if not value:
                    raise self.error(f"empty narrative line '{prefix.strip()}'", n, column)
                self.narrative_parts[key] = value
                return
        self.description.append(stripped)

    def _finish_narrative(self, n: int) -> Optional[NarrativeBlock]:
        if not self.narrative_parts and not self.narrative_label_seen:
            return None
        missing = [k for k in ("role", "want", "benefit") if k not in self.narrative_parts]
        if missing:
            raise self.error(f"incomplete narrative block (missing {', '.join(missing)})", n)
        return NarrativeBlock(
            role=self.narrative_parts["role"],
            want=self.narrative_parts["want"],
            benefit=self.narrative_parts["benefit"],
        )

    def _close_scenario(self, n: int) -> None:
        if self.cur is None:
            return
        cur = self.cur
        if not cur["steps"]:
            raise self.error(f"scenario '{cur['title']}' has no steps", cur["line"])
        examples = None
        if cur["kind"] is ScenarioKind.OUTLINE:
            if self.ex_headers is None:
                raise self.error(
                    f"Scenario Outline '{cur['title']}' has no Examples block", cur["line"]
                )
            examples = ExamplesTable(self.ex_headers, tuple(self.ex_rows), self.ex_comments)
        elif self.in_examples or self.ex_headers is not None:
            raise self.error("Examples attached to a plain Scenario", cur["line"])
        scenario = Scenario(
            title=cur["title"],
            kind=cur["kind"],
            steps=tuple(cur["steps"]),
            examples=examples,
            tags=cur["tags"],
            comments=cur["comments"],
        )
        if examples is not None:
            unknown = scenario.placeholders() - set(examples.headers)
            if unknown:
                raise self.error(
                    f"placeholders not in Examples headers: {', '.join(sorted(unknown))}",
                    cur["line"],
                )
        self.scenarios.append(scenario)
        self.cur = None
        self.in_examples = False
        self.ex_headers = None
        self.ex_rows = []
        self.ex_comments = ()


def parse_feature(source: str, source_path: Optional[str] = None) -> GherkinDocument:
    """Parse UTF-8 feature text into a document, raising ParseError on bad grammar."""
    return _Parser(source, source_path).parse()


def _validate_for_serialize(doc: GherkinDocument) -> None:
    if not doc.feature_title.strip():
        raise InvariantError("feature title is empty")
    if not doc.scenarios:
        raise InvariantError("document has no scenarios")
    if doc.narrative is not None:
        for name in ("role", "want", "benefit"):
            if not getattr(doc.narrative, name).strip():
                raise InvariantError(f"narrative {name} is empty")
    for scenario in doc.scenarios:
        if not scenario.steps:
            raise InvariantError(f"scenario '{scenario.title}' has no steps")
        if scenario.kind is ScenarioKind.OUTLINE:
            if scenario.examples is None:
                raise InvariantError(f"outline '{scenario.title}' has no examples")
            unknown = scenario.placeholders() - set(scenario.examples.headers)
            if unknown:
                raise InvariantError(
                    f"outline '{scenario.title}' uses headers {sorted(unknown)} "
                    "not present in its Examples table"
                )
            for row in scenario.examples.rows:
                if len(row) != len(scenario.examples.headers):
                    raise InvariantError(f"ragged Examples row in '{scenario.title}'")
        elif scenario.examples is not None:
            raise InvariantError(f"plain scenario '{scenario.title}' carries an Examples table")


def serialize(doc: GherkinDocument) -> str:
    """Render a document as normalized feature text (2-space nesting, LF endings)."""
    _validate_for_serialize(doc)
    out: list[str] = []
    for comment in doc.comments:
        out.append(f"# {comment}".rstrip())
    if doc.tags:
        out.append(" ".join(doc.tags))
    out.append(f"Feature: {doc.feature_title}")
    if doc.narrative is not None:
        out.append("")
        out.append("  Narrative:")
        out.append(f"  As {doc.narrative.role}")
        out.append(f"  I want {doc.narrative.want}")
        out.append(f"  So that {doc.narrative.benefit}")
    if doc.description:
        out.append("")
        for line in doc.description:
            out.append(f"  {line}")
    if doc.background:
        out.append("")
        out.append("  Background:")
        for step in doc.background:
            for comment in step.comments:
                out.append(f"    # {comment}".rstrip())
            out.append(f"    {step.render()}")
    for scenario in doc.scenarios:
        out.append("")
        for comment in scenario.comments:
            out.append(f"  # {comment}".rstrip())
        if scenario.tags:
            out.append("  " + " ".join(scenario.tags))
        header = "Scenario Outline" if scenario.kind is ScenarioKind.OUTLINE else "Scenario"
        title = f" {scenario.title}" if scenario.title else ""
        out.append(f"  {header}:{title}")
        for step in scenario.steps:
            for comment in step.comments:
                out.append(f"    # {comment}".rstrip())
            out.append(f"    {step.render()}")
        if scenario.examples is not None:
            for comment in scenario.examples.comments:
                out.append(f"    # {comment}".rstrip())
            out.append("    Examples:")
            out.append("      | " + " | ".join(scenario.examples.headers) + " |")
            for row in scenario.examples.rows:
                out.append("      | " + " | ".join(row) + " |")
    for comment in doc.trailing_comments:
        out.append(f"# {comment}".rstrip())
    return "\n".join(out) + "\n"


def count_physical_lines(source: str) -> int:
    """Physical line count including blanks, excluding the trailing newline."""
    if not source:
        return 0
    text = source.replace("\r\n", "\n").replace("\r", "\n")
    if text.endswith("\n"):
        text = text[:-1]
    if not text:
        return 0
    return len(text.split("\n"))


def keyword_stats(docs: list[GherkinDocument], raw_sources: list[str]) -> KeywordStats:
    """Aggregate literal keyword counts and per-feature size statistics.

    Counts are over literal keyword tokens: an And step is not folded into
    the Given/When/Then totals. Background steps count toward key_given.
    """
    if len(docs) != len(raw_sources):
        raise ValueError("docs and raw_sources must be parallel lists")
    f_num = len(docs)
    if f_num == 0:
        return KeywordStats(0, 0.0, 0.0, 0, 0, 0, 0)
    counts = {StepKeyword.GIVEN: 0, StepKeyword.WHEN: 0, StepKeyword.THEN: 0}
    key_examples = 0
    total_scenarios = 0
    for doc in docs:
        for step in doc.background:
            if step.keyword in counts:
                counts[step.keyword] += 1
        total_scenarios += len(doc.scenarios)
        for scenario in doc.scenarios:
            for step in scenario.steps:
                if step.keyword in counts:
                    counts[step.keyword] += 1
            if scenario.examples is not None:
                key_examples += 1
    avg_loc = sum(count_physical_lines(s) for s in raw_sources) / f_num
    return KeywordStats(
        f_num=f_num,
        avg_loc=avg_loc,
        f_sce=total_scenarios / f_num,
        key_given=counts[StepKeyword.GIVEN],
        key_when=counts[StepKeyword.WHEN],
        key_then=counts[StepKeyword.THEN],
        key_examples=key_examples,
    )
