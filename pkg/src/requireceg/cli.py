"""Command-line interface.

Subcommands:
  run        execute the full pipeline over a narrative or a dataset file
  lint       validate feature files (exit 0 only when all are clean)
  measure    compute keyword/syntax/readability metrics for a feature directory
  review     review one feature file against a causal-graph file
  ceg-check  formally check a causal-graph file

Exit codes for `run`: 0 success, 1 partial (failed features or residual
semantic issues), 2 configuration or transport failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .ceg.dsl import check_formal, parse_ceg
from .errors import RequireCegError
from .gherkin.ast import keyword_stats, parse_feature, serialize
from .gherkin.lint import acc_syn, lint
from .metrics import classify_furps, diversity, readability
from .oracle import load_profile
from .pipeline import PipelineConfig, run_dataset, run_pipeline
from .review import review as review_document


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    data = {}
    if args.config:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if args.oracle:
        data["oracle_profile"] = args.oracle
    if args.out:
        data["output_dir"] = args.out
    if args.max_iters is not None:
        data["max_iters"] = args.max_iters
    if "oracle_profile" not in data:
        raise RequireCegError("an oracle profile is required (--oracle or config file)")
    return PipelineConfig(
        oracle_profile=data["oracle_profile"],
        output_dir=data.get("output_dir", "out"),
        max_iters=int(data.get("max_iters", 5)),
        enumeration_cap=int(data.get("enumeration_cap", 20)),
        per_feature_parallelism=int(data.get("per_feature_parallelism", 1)),
    )


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args)
        if args.dataset:
            manifests = run_dataset(args.dataset, config)
        else:
            narrative = Path(args.narrative).read_text(encoding="utf-8")
            manifests = [run_pipeline(narrative, config, project_id=args.project_id)]
    except RequireCegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    partial = any(m.failed_features or m.residual_issue_features for m in manifests)
    for manifest in manifests:
        print(f"{manifest.project_id}: {len(manifest.features)} feature(s), "
              f"{len(manifest.failed_features)} failed, "
              f"{len(manifest.residual_issue_features)} with residual issues")
    return 1 if partial else 0


def _cmd_lint(args: argparse.Namespace) -> int:
    all_findings = {}
    for path in args.paths:
        source = Path(path).read_text(encoding="utf-8")
        all_findings[path] = lint(source)
    if args.format == "json":
        print(json.dumps(
            {path: [f.to_dict() for f in findings]
             for path, findings in all_findings.items()},
            indent=2, sort_keys=True))
    else:
        for path, findings in all_findings.items():
            for finding in findings:
                print(f"{path}:{finding.line}:{finding.column}: "
                      f"{finding.rule_id}: {finding.message}")
    return 0 if all(not f for f in all_findings.values()) else 1


def _cmd_measure(args: argparse.Namespace) -> int:
    paths = sorted(Path(args.directory).glob("**/*.feature"))
    if not paths:
        print("error: no .feature files found", file=sys.stderr)
        return 2
    sources = [p.read_text(encoding="utf-8") for p in paths]
    docs = []
    for path, source in zip(paths, sources):
        try:
            docs.append(parse_feature(source, source_path=str(path)))
        except RequireCegError:
            docs.append(None)
    parsed = [(d, s) for d, s in zip(docs, sources) if d is not None]
    report: dict = {
        "schema_version": 1,
        "files": len(paths),
        "acc_syn": acc_syn(sources).to_dict(),
    }
    if parsed:
        stats = keyword_stats([d for d, _ in parsed], [s for _, s in parsed])
        report["keyword_stats"] = stats.to_dict()
        scores = [readability(s).to_dict() for _, s in parsed]
        report["readability"] = scores
    if args.oracle:
        oracle = load_profile(args.oracle)
        titles = [d.feature_title for d, _ in parsed]
        if titles:
            report["diversity"] = diversity(classify_furps(titles, oracle)).to_dict()
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _cmd_review(args: argparse.Namespace) -> int:
    doc = parse_feature(Path(args.feature).read_text(encoding="utf-8"),
                        source_path=args.feature)
    graph = parse_ceg(Path(args.ceg).read_text(encoding="utf-8"))
    oracle = load_profile(args.oracle) if args.oracle else None
    revised, report = review_document(doc, graph, oracle)
    out = Path(args.out)
    out.write_text(serialize(revised), encoding="utf-8")
    report_path = out.with_suffix(out.suffix + ".report.json")
    report_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")
    print(f"wrote {out} and {report_path}")
    return 0


def _cmd_ceg_check(args: argparse.Namespace) -> int:
    graph = parse_ceg(Path(args.ceg).read_text(encoding="utf-8"))
    errors = check_formal(list(graph.raw_statements), graph.node_map)
    for error in errors:
        print(f"{error.kind.value}: {error.statement_text}: {error.detail}")
    if not errors:
        print("ok: every statement is well formed")
    return 0 if not errors else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="requireceg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full pipeline")
    group = run.add_mutually_exclusive_group(required=True)
    group.add_argument("--narrative", help="path to a narrative text file")
    group.add_argument("--dataset", help="path to a dataset JSON file")
    run.add_argument("--config", help="path to a pipeline config JSON file")
    run.add_argument("--oracle", help="path to an oracle profile JSON file")
    run.add_argument("--out", help="output directory")
    run.add_argument("--max-iters", type=int, default=None,
                     help="healing iteration cap (default 5)")
    run.add_argument("--project-id", default="project")
    run.set_defaults(func=_cmd_run)

    lint_cmd = sub.add_parser("lint", help="lint feature files")
    lint_cmd.add_argument("paths", nargs="+")
    lint_cmd.add_argument("--format", choices=("text", "json"), default="text")
    lint_cmd.set_defaults(func=_cmd_lint)

    measure = sub.add_parser("measure", help="measure a directory of feature files")
    measure.add_argument("directory")
    measure.add_argument("--report", help="write the JSON report to this path")
    measure.add_argument("--oracle", help="oracle profile for category classification")
    measure.set_defaults(func=_cmd_measure)

    review_cmd = sub.add_parser("review", help="review a feature against a causal graph")
    review_cmd.add_argument("--feature", required=True)
    review_cmd.add_argument("--ceg", required=True)
    review_cmd.add_argument("--oracle")
    review_cmd.add_argument("--out", required=True)
    review_cmd.set_defaults(func=_cmd_review)

    check = sub.add_parser("ceg-check", help="formally check a causal-graph file")
    check.add_argument("--ceg", required=True)
    check.set_defaults(func=_cmd_ceg_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RequireCegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
