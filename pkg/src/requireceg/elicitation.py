"""Oracle-backed elicitation: feature tree, behavior texts, atoms, draft artifacts.

Each function wraps one agent exchange. Answers arrive as structured JSON
and are validated before use; a validation failure triggers exactly one
reprompt that includes the validation errors, then a hard failure.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .ceg.dsl import FormalError, check_formal, compose_source, parse_ceg
from .ceg.model import AtomicNode, CausalEffectGraph, NodeKind, kind_for_id
from .errors import (
    AtomValidationFailure,
    DraftParseFailure,
    DslSyntaxError,
    InvariantError,
    OracleFailure,
    ParseError,
    TreeValidationFailure,
)
from .gherkin.ast import GherkinDocument, parse_feature
from .oracle import Oracle, OracleRequest, parse_structured_answer

logger = logging.getLogger(__name__)

MAX_TREE_DEPTH = 3


class Kano(str, Enum):
    MUST_BE = "MustBe"
    ONE_DIMENSIONAL = "OneDimensional"
    ATTRACTIVE = "Attractive"
    INDIFFERENT = "Indifferent"
    UNLABELED = "Unlabeled"


_KANO_ALIASES = {
    "must-be": Kano.MUST_BE,
    "mustbe": Kano.MUST_BE,
    "must be": Kano.MUST_BE,
    "one-dimensional": Kano.ONE_DIMENSIONAL,
    "onedimensional": Kano.ONE_DIMENSIONAL,
    "one dimensional": Kano.ONE_DIMENSIONAL,
    "attractive": Kano.ATTRACTIVE,
    "indifferent": Kano.INDIFFERENT,
    "unlabeled": Kano.UNLABELED,
}


@dataclass(frozen=True)
class FeatureNode:
    name: str
    level: int  # 1..3
    kano: Kano = Kano.UNLABELED
    narrative_span: Optional[str] = None
    children: tuple["FeatureNode", ...] = ()

    def is_leaf(self) -> bool:
        return not self.children

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "level": self.level,
            "kano": self.kano.value,
            "narrative_span": self.narrative_span,
            "children": [c.to_dict() for c in self.children],
        }


@dataclass(frozen=True)
class FeatureTree:
    product_name: str
    roots: tuple[FeatureNode, ...]

    def leaves(self) -> tuple[FeatureNode, ...]:
        found: list[FeatureNode] = []

        def walk(node: FeatureNode) -> None:
            if node.is_leaf():
                found.append(node)
            for child in node.children:
                walk(child)

        for root in self.roots:
            walk(root)
        return tuple(found)

    def to_dict(self) -> dict:
        return {"product": self.product_name, "features": [r.to_dict() for r in self.roots]}


@dataclass(frozen=True)
class BehaviorRequirement:
    feature: FeatureNode
    user_behavior: str
    system_behavior: str


@dataclass
class CegBuildResult:
    raw_statements: list[str]
    graph: CausalEffectGraph
    formal_errors: list[FormalError]
    notes: list[str] = field(default_factory=list)


def _ask(oracle: Oracle, agent: str, payload: dict) -> dict:
    answer = oracle.complete(OracleRequest(agent=agent, payload=payload))
    return parse_structured_answer(answer)


def _parse_tree_node(item: object, level: int, errors: list[str]) -> Optional[FeatureNode]:
    if not isinstance(item, dict):
        errors.append(f"feature entry at level {level} is not an object")
        return None
    name = str(item.get("name", "")).strip()
    if not name:
        errors.append(f"feature entry at level {level} has no name")
        return None
    if level > MAX_TREE_DEPTH:
        errors.append(f"feature '{name}' exceeds depth {MAX_TREE_DEPTH}")
        return None
    kano_raw = str(item.get("kano", "") or "").strip().lower()
    kano = _KANO_ALIASES.get(kano_raw, Kano.UNLABELED)
    if kano_raw and kano_raw not in _KANO_ALIASES:
        logger.info("unknown satisfaction label %r on %s, keeping Unlabeled", kano_raw, name)
    span = item.get("narrative_span")
    children_raw = item.get("children", []) or []
    children = []
    for child in children_raw:
        node = _parse_tree_node(child, level + 1, errors)
        if node is not None:
            children.append(node)
    return FeatureNode(
        name=name,
        level=level,
        kano=kano,
        narrative_span=str(span) if span else None,
        children=tuple(children),
    )


def _validate_tree_answer(data: dict) -> tuple[Optional[FeatureTree], list[str]]:
    errors: list[str] = []
    product = str(data.get("product", "")).strip()
    if not product:
        errors.append("missing product name")
    features = data.get("features")
    if not isinstance(features, list) or not features:
        errors.append("missing feature list")
        features = []
    roots = []
    for item in features:
        node = _parse_tree_node(item, 1, errors)
        if node is not None:
            roots.append(node)
    if errors:
        return None, errors
    return FeatureTree(product_name=product, roots=tuple(roots)), []


def generate_feature_tree(narrative: str, oracle: Oracle) -> FeatureTree:
    """Decompose a narrative into a hierarchical feature tree (up to 3 levels)."""
    if not narrative.strip():
        raise ValueError("narrative must be non-empty")
    payload = {"narrative": narrative}
    tree, errors = _validate_tree_answer(_ask(oracle, "FeatureTreeGenerator", payload))
    if tree is not None:
        return tree
    retry_payload = {"narrative": narrative, "errors": errors}
    tree, errors = _validate_tree_answer(_ask(oracle, "FeatureTreeGenerator", retry_payload))
    if tree is not None:
        return tree
    raise TreeValidationFailure("; ".join(errors))


def elicit_user_behavior(leaf: FeatureNode, narrative: str, oracle: Oracle) -> str:
    """Elicit triggering conditions for one leaf feature, from the user's view."""
    if not leaf.is_leaf():
        raise ValueError(f"feature '{leaf.name}' is not a leaf node")
    payload = {
        "feature": leaf.name,
        "level": leaf.level,
        "narrative_span": leaf.narrative_span or "",
        "narrative": narrative,
    }
    data = _ask(oracle, "AnalyzeUserBehavior", payload)
    text = str(data.get("user_behavior", "")).strip()
    if not text:
        raise OracleFailure("empty user behavior answer")
    return text


def elicit_system_behavior(user_behavior: str, oracle: Oracle) -> str:
    """Couple each trigger in the user behavior to a system response."""
    if not user_behavior.strip():
        raise ValueError("user_behavior must be non-empty")
    data = _ask(oracle, "AnalyzeSystemBehavior", {"user_behavior": user_behavior})
    text = str(data.get("system_behavior", "")).strip()
    if not text:
        raise OracleFailure("empty system behavior answer")
    return text


def _validate_atoms(data: dict) -> tuple[list[AtomicNode], list[str], list[str]]:
    atoms: list[AtomicNode] = []
    errors: list[str] = []
    notes: list[str] = []
    seen_ids: set[str] = set()
    seen_desc: dict[tuple[NodeKind, str], str] = {}
    for key, kind in (("conditions", NodeKind.CONDITION), ("effects", NodeKind.EFFECT)):
        entries = data.get(key)
        if not isinstance(entries, list):
            errors.append(f"missing '{key}' list")
            continue
        for entry in entries:
            if not isinstance(entry, dict):
                errors.append(f"{key} entry is not an object")
                continue
            atom_id = str(entry.get("id", "")).strip()
            # collapse whitespace: descriptions feed a line-based format
            description = " ".join(str(entry.get("description", "")).split())
            if not atom_id or not description:
                errors.append(f"{key} entry missing id or description")
                continue
            try:
                declared_kind = kind_for_id(atom_id)
            except InvariantError:
                errors.append(f"invalid node id '{atom_id}'")
                continue
            if declared_kind is not kind:
                errors.append(f"id '{atom_id}' does not match kind {kind.value}")
                continue
            if atom_id in seen_ids:
                errors.append(f"duplicate id '{atom_id}'")
                continue
            norm = " ".join(description.lower().split())
            if (kind, norm) in seen_desc:
                notes.append(
                    f"merged duplicate description of {atom_id} into {seen_desc[(kind, norm)]}"
                )
                continue
            seen_ids.add(atom_id)
            seen_desc[(kind, norm)] = atom_id
            atoms.append(AtomicNode(atom_id, kind, description))
    if not errors and not atoms:
        errors.append("no atoms identified")
    return atoms, errors, notes


def identify_atoms(system_behavior: str, oracle: Oracle) -> list[AtomicNode]:
    """Extract atomic conditions and effects from a system behavior requirement."""
    if not system_behavior.strip():
        raise ValueError("system_behavior must be non-empty")
    payload = {"system_behavior": system_behavior}
    atoms, errors, notes = _validate_atoms(_ask(oracle, "IdentifyCAndE", payload))
    if errors:
        retry = {"system_behavior": system_behavior, "errors": errors}
        atoms, errors, notes = _validate_atoms(_ask(oracle, "IdentifyCAndE", retry))
        if errors:
            raise AtomValidationFailure("; ".join(errors))
    for note in notes:
        logger.info("%s", note)
    return atoms


def build_ceg(atoms: list[AtomicNode], system_behavior: str, oracle: Oracle) -> CegBuildResult:
    """Ask the oracle for causal statements and parse them without repairing.

    Formal errors are returned alongside the raw statements; fixing them is
    the healing loop's job.
    """
    if not atoms:
        raise ValueError("atoms must be non-empty")
    payload = {
        "system_behavior": system_behavior,
        "atoms": [{"id": a.id, "kind": a.kind.value, "description": a.description}
                  for a in atoms],
    }
    data = _ask(oracle, "BuildCEG", payload)
    statements = data.get("statements")
    if not isinstance(statements, list) or not all(isinstance(s, str) for s in statements):
        raise OracleFailure("BuildCEG answer must contain a 'statements' list of strings")
    statements = [s.strip() for s in statements if s.strip()]
    try:
        graph = parse_ceg(compose_source(atoms, statements))
    except DslSyntaxError as exc:
        raise OracleFailure(f"BuildCEG produced malformed statements: {exc}") from exc
    errors = check_formal(statements, {a.id: a for a in atoms})
    notes = list(graph.parse_log)
    if not statements:
        notes.append("vacuous graph: oracle returned no causal statements")
    return CegBuildResult(raw_statements=statements, graph=graph,
                          formal_errors=errors, notes=notes)


def _validate_draft(text: str) -> tuple[Optional[GherkinDocument], list[str]]:
    try:
        doc = parse_feature(text)
    except ParseError as exc:
        return None, [f"parse error: {exc}"]
    errors = []
    if doc.narrative is None:
        errors.append("draft must include a narrative (As a / I want / So that)")
    if not doc.scenarios:
        errors.append("draft must include at least one scenario")
    if errors:
        return None, errors
    return doc, []


def draft_gherkin(system_behavior: str, feature: FeatureNode, oracle: Oracle) -> GherkinDocument:
    """Generate the draft feature document for one behavior requirement."""
    if not system_behavior.strip():
        raise ValueError("system_behavior must be non-empty")
    payload = {"system_behavior": system_behavior, "feature": feature.name}
    data = _ask(oracle, "GenerateGherkin", payload)
    doc, errors = _validate_draft(str(data.get("feature_text", "")))
    if doc is not None:
        return doc
    retry = {"system_behavior": system_behavior, "feature": feature.name, "errors": errors}
    data = _ask(oracle, "GenerateGherkin", retry)
    doc, errors = _validate_draft(str(data.get("feature_text", "")))
    if doc is not None:
        return doc
    raise DraftParseFailure("; ".join(errors))
