"""End-to-end orchestration: narrative in, reviewed feature files and reports out.

For every leaf of the feature tree the pipeline elicits behavior texts,
builds and heals a causal graph, drafts a feature file, reviews it against
the graph, and writes all eight artifacts under the output directory. A
failure in one feature is isolated; the manifest records it and the run
continues.
"""

from __future__ import annotations

import json
import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from .ceg.analysis import ENUMERATION_CAP
from .ceg.dsl import serialize_ceg
from .elicitation import (
    FeatureNode,
    build_ceg,
    draft_gherkin,
    elicit_system_behavior,
    elicit_user_behavior,
    generate_feature_tree,
    identify_atoms,
)
from .errors import LabelFileMissing, RequireCegError, TooManyConditions
from .gherkin.ast import parse_feature, serialize
from .gherkin.lint import lint
from .intervention import DEFAULT_MAX_ITERS, heal
from .metrics import ProjectReport, project_report
from .oracle import Oracle, load_profile
from .review import review

logger = logging.getLogger(__name__)

ARTIFACT_NAMES = (
    "user_behavior",
    "system_behavior",
    "atoms",
    "ceg",
    "healing_log",
    "draft.feature",
    "reviewed.feature",
    "review_report",
)


@dataclass
class PipelineConfig:
    oracle_profile: Any  # mapping, profile path, or an Oracle instance
    output_dir: str | Path = "out"
    max_iters: int = DEFAULT_MAX_ITERS
    enumeration_cap: int = ENUMERATION_CAP
    per_feature_parallelism: int = 1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.enumeration_cap < 1 or self.per_feature_parallelism < 1:
            raise ValueError("caps must be positive")

    def resolve_oracle(self) -> Oracle:
        if hasattr(self.oracle_profile, "complete"):
            return self.oracle_profile
        return load_profile(self.oracle_profile)

    def snapshot(self) -> dict:
        profile = self.oracle_profile
        if hasattr(profile, "complete"):
            profile = type(profile).__name__
        elif isinstance(profile, Mapping):
            profile = dict(profile)
        else:
            profile = str(profile)
        return {
            "oracle_profile": profile,
            "output_dir": str(self.output_dir),
            "max_iters": self.max_iters,
            "enumeration_cap": self.enumeration_cap,
            "per_feature_parallelism": self.per_feature_parallelism,
        }


@dataclass(frozen=True)
class DatasetEntry:
    project_id: str
    narrative: str
    reference_features: tuple[str, ...] = ()


@dataclass
class RunManifest:
    project_id: str
    config: dict
    features: list[dict] = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    residual_issue_features: list[str] = field(default_factory=list)
    failed_features: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "project_id": self.project_id,
            "config": self.config,
            "features": self.features,
            "residual_issue_features": self.residual_issue_features,
            "failed_features": self.failed_features,
            "timing": self.timing,
        }


def slugify(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return slug or "feature"


def _unique_slugs(leaves: Sequence[FeatureNode]) -> list[str]:
    slugs: list[str] = []
    seen: dict[str, int] = {}
    for leaf in leaves:
        base = slugify(leaf.name)
        count = seen.get(base, 0) + 1
        seen[base] = count
        slugs.append(base if count == 1 else f"{base}-{count}")
    return slugs


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _write_json(path: Path, payload: dict) -> None:
    _write(path, json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def _process_leaf(leaf: FeatureNode, slug: str, narrative: str, oracle: Oracle,
                  config: PipelineConfig, feature_dir: Path, base_dir: Path) -> dict:
    record: dict = {"name": leaf.name, "slug": slug, "status": "ok", "artifacts": {}}

    def artifact(name: str, filename: str, text: str) -> None:
        path = feature_dir / filename
        _write(path, text)
        record["artifacts"][name] = str(path.relative_to(base_dir))

    user_behavior = elicit_user_behavior(leaf, narrative, oracle)
    artifact("user_behavior", "user_behavior.txt", user_behavior + "\n")
    system_behavior = elicit_system_behavior(user_behavior, oracle)
    artifact("system_behavior", "system_behavior.txt", system_behavior + "\n")

    atoms = identify_atoms(system_behavior, oracle)
    artifact("atoms", "atoms.json", json.dumps(
        [{"id": a.id, "kind": a.kind.value, "description": a.description} for a in atoms],
        indent=2, sort_keys=True) + "\n")

    built = build_ceg(atoms, system_behavior, oracle)
    conditions = built.graph.conditions()
    if len(conditions) > config.enumeration_cap:
        raise TooManyConditions(
            f"{len(conditions)} conditions exceed the configured cap of "
            f"{config.enumeration_cap}")
    healed, log = heal(system_behavior, atoms, built.graph, oracle,
                       max_iters=config.max_iters,
                       enumeration_cap=config.enumeration_cap)
    artifact("ceg", "ceg.txt", serialize_ceg(healed))
    artifact("healing_log", "healing_log.json",
             json.dumps(log.to_dict(), indent=2, sort_keys=True) + "\n")
    record["residual_semantic_issues"] = not log.converged

    draft = draft_gherkin(system_behavior, leaf, oracle)
    artifact("draft.feature", "draft.feature", serialize(draft))
    reviewed, report = review(draft, healed, oracle,
                              enumeration_cap=config.enumeration_cap)
    reviewed_text = serialize(reviewed)
    artifact("reviewed.feature", "reviewed.feature", reviewed_text)
    artifact("review_report", "review_report.json",
             json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    findings = lint(reviewed_text)
    record["lint_findings"] = [f.to_dict() for f in findings]
    record["review_summary"] = report.summary()
    return record


def run_pipeline(narrative: str, config: PipelineConfig,
                 project_id: str = "project") -> RunManifest:
    """Run the three phases over one narrative and write all artifacts."""
    started = time.time()
    oracle = config.resolve_oracle()
    base_dir = Path(config.output_dir) / project_id
    manifest = RunManifest(project_id=project_id, config=config.snapshot())

    tree = generate_feature_tree(narrative, oracle)
    _write_json(base_dir / "feature_tree.json", tree.to_dict())
    leaves = tree.leaves()
    slugs = _unique_slugs(leaves)

    def work(pair: tuple[FeatureNode, str]) -> dict:
        leaf, slug = pair
        try:
            return _process_leaf(leaf, slug, narrative, oracle, config,
                                 base_dir / slug, base_dir)
        except RequireCegError as exc:
            logger.error("feature %s failed: %s", leaf.name, exc)
            return {"name": leaf.name, "slug": slug, "status": "failed",
                    "error": str(exc), "artifacts": {}}

    pairs = list(zip(leaves, slugs))
    if config.per_feature_parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.per_feature_parallelism) as pool:
            records = list(pool.map(work, pairs))
    else:
        records = [work(pair) for pair in pairs]

    for record in sorted(records, key=lambda r: r["slug"]):
        manifest.features.append(record)
        if record["status"] == "failed":
            manifest.failed_features.append(record["slug"])
        elif record.get("residual_semantic_issues"):
            manifest.residual_issue_features.append(record["slug"])
    manifest.timing = {"started_at": started, "duration_seconds": time.time() - started}
    _write_json(base_dir / "manifest.json", manifest.to_dict())
    return manifest


def load_dataset(path: str | Path) -> tuple[list[DatasetEntry], list[str]]:
    """Load dataset entries; malformed entries are skipped with a reason."""
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    if isinstance(data, Mapping):
        data = [data]
    if not isinstance(data, list):
        raise RequireCegError("dataset file must contain a list of project objects")
    entries: list[DatasetEntry] = []
    skipped: list[str] = []
    for i, item in enumerate(data):
        if not isinstance(item, Mapping):
            skipped.append(f"entry {i}: not an object")
            continue
        narrative = str(item.get("narrative", "")).strip()
        if not narrative:
            skipped.append(f"entry {i}: missing narrative")
            continue
        project_id = str(item.get("project_id", "") or f"project-{i}")
        features = item.get("features", []) or []
        if not isinstance(features, list):
            skipped.append(f"entry {i}: features is not a list")
            continue
        entries.append(DatasetEntry(
            project_id=project_id,
            narrative=narrative,
            reference_features=tuple(str(f) for f in features),
        ))
    return entries, skipped


def _project_metrics(manifest: RunManifest, base_dir: Path,
                     oracle: Oracle) -> Optional[ProjectReport]:
    docs = []
    sources = []
    reports = []
    for record in manifest.features:
        if record["status"] != "ok":
            continue
        path = base_dir / record["artifacts"]["reviewed.feature"]
        text = path.read_text(encoding="utf-8")
        docs.append(parse_feature(text, source_path=str(path)))
        sources.append(text)
        report_path = base_dir / record["artifacts"]["review_report"]
        reports.append(json.loads(report_path.read_text(encoding="utf-8")))
    if not docs:
        return None
    metrics = project_report(docs, sources, None, oracle)
    metrics.review_summary = {
        "kept": sum(len(raw.get("kept", [])) for raw in reports),
        "modified": sum(len(raw.get("modified", [])) for raw in reports),
        "added": sum(len(raw.get("added", [])) for raw in reports),
    }
    return metrics


def run_dataset(path: str | Path, config: PipelineConfig) -> list[RunManifest]:
    """Run the pipeline over every dataset entry and write an aggregate report."""
    entries, skipped = load_dataset(path)
    for reason in skipped:
        logger.warning("skipped dataset entry: %s", reason)
    oracle = config.resolve_oracle()
    manifests: list[RunManifest] = []
    rows: list[dict] = []
    for entry in entries:
        manifest = run_pipeline(entry.narrative, config, project_id=entry.project_id)
        manifests.append(manifest)
        metrics = _project_metrics(manifest, Path(config.output_dir) / entry.project_id,
                                   oracle)
        row = {"project_id": entry.project_id,
               "failed_features": len(manifest.failed_features),
               "residual_issue_features": len(manifest.residual_issue_features)}
        if metrics is not None:
            row.update({
                "f_num": metrics.keyword_stats.f_num,
                "f_sce": metrics.keyword_stats.f_sce,
                "avg_loc": metrics.keyword_stats.avg_loc,
                "acc_syn": float(metrics.acc_syn.value),
                "gunning_fog": metrics.readability.gunning_fog,
                "linsear_write": metrics.readability.linsear_write,
                "fundiv": metrics.diversity.entropy,
            })
        rows.append(row)
    aggregate: dict = {"schema_version": 1, "projects": len(rows),
                       "skipped_entries": skipped, "rows": rows}
    metric_keys = ("f_num", "f_sce", "avg_loc", "acc_syn", "gunning_fog",
                   "linsear_write", "fundiv")
    for key in metric_keys:
        values = [row[key] for row in rows if key in row]
        if values:
            aggregate[f"{key}_mean"] = sum(values) / len(values)
    _write_json(Path(config.output_dir) / "aggregate_report.json", aggregate)
    return manifests


def compare_against_reference(manifest: RunManifest | Mapping,
                              labels_path: str | Path | None = None) -> dict:
    """Compute coverage ratios from a human-judgment label file.

    The label file has two arrays: `generated` entries {feature, covered,
    justification} and `reference_functions` entries {function, covered}.
    Nothing is matched automatically.
    """
    if labels_path is None:
        raise LabelFileMissing("no label file was supplied")
    path = Path(labels_path)
    if not path.exists():
        raise LabelFileMissing(f"label file not found: {path}")
    data = json.loads(path.read_text(encoding="utf-8"))
    generated = data.get("generated", [])
    reference = data.get("reference_functions", [])
    if not generated:
        raise LabelFileMissing("label file lists no generated-feature judgments")
    covered_generated = sum(1 for item in generated if item.get("covered"))
    summary = {
        "generated_total": len(generated),
        "generated_covered": covered_generated,
        "cover_our": covered_generated / len(generated),
    }
    if reference:
        covered_reference = sum(1 for item in reference if item.get("covered"))
        summary.update({
            "reference_total": len(reference),
            "reference_covered": covered_reference,
            "cover_real_func": covered_reference / len(reference),
        })
    return summary
