"""Unit tests for pipeline orchestration, datasets, coverage, and the CLI."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from conftest import FIXTURES
from requireceg.cli import main
from requireceg.errors import LabelFileMissing, OracleFailure
from requireceg.gherkin.lint import lint
from requireceg.pipeline import (
    ARTIFACT_NAMES,
    PipelineConfig,
    compare_against_reference,
    load_dataset,
    run_dataset,
    run_pipeline,
)

TIME_TRAVEL_NARRATIVE = (
    "I'd like to create a time travel adventure application that lets children "
    "explore different eras through interactive storytelling and educational games."
)


def e2e_config(tmp_path, **overrides):
    return PipelineConfig(
        oracle_profile={"type": "mock",
                        "fixtures": str(FIXTURES / "oracle" / "e2e_mock.json")},
        output_dir=tmp_path / "out",
        **overrides,
    )


class TestRunPipeline:
    def test_fixture_run_produces_complete_artifacts(self, tmp_path):
        config = e2e_config(tmp_path)
        manifest = run_pipeline(TIME_TRAVEL_NARRATIVE, config, project_id="tt")
        assert len(manifest.features) >= 2
        assert manifest.failed_features == []
        base = Path(config.output_dir) / "tt"
        for record in manifest.features:
            assert set(record["artifacts"]) == set(ARTIFACT_NAMES)
            for rel in record["artifacts"].values():
                assert (base / rel).exists()
            reviewed = (base / record["artifacts"]["reviewed.feature"]).read_text("utf-8")
            assert lint(reviewed) == []

    def test_defective_draft_is_repaired(self, tmp_path):
        config = e2e_config(tmp_path)
        manifest = run_pipeline(TIME_TRAVEL_NARRATIVE, config, project_id="tt")
        by_slug = {r["slug"]: r for r in manifest.features}
        assert by_slug["character-interaction"]["review_summary"]["modified"] == 1
        assert by_slug["pyramid-mini-game"]["review_summary"] == {
            "kept": 1, "modified": 0, "added": 0}

    def test_unreachable_oracle_fails_before_features(self, tmp_path):
        config = PipelineConfig(
            oracle_profile={"type": "http", "endpoint": "http://127.0.0.1:1/v1",
                            "model": "m", "retries": 0, "timeout": 0.5},
            output_dir=tmp_path / "out",
        )
        with pytest.raises(OracleFailure):
            run_pipeline(TIME_TRAVEL_NARRATIVE, config, project_id="tt")
        assert not (tmp_path / "out" / "tt" / "manifest.json").exists()

    def test_feature_failures_are_isolated(self, tmp_path):
        script = json.loads(
            (FIXTURES / "oracle" / "e2e_mock.json").read_text("utf-8"))
        # Remove the fixtures for one leaf: its elicitation now fails.
        rules = script["agents"]["AnalyzeUserBehavior"]["rules"]
        script["agents"]["AnalyzeUserBehavior"]["rules"] = [
            r for r in rules if "Character Interaction" not in r["when_contains"]]
        config = PipelineConfig(oracle_profile={"type": "mock", "script": script},
                                output_dir=tmp_path / "out")
        manifest = run_pipeline(TIME_TRAVEL_NARRATIVE, config, project_id="tt")
        assert manifest.failed_features == ["character-interaction"]
        ok = [r for r in manifest.features if r["status"] == "ok"]
        assert {r["slug"] for r in ok} == {"pyramid-mini-game"}
        for record in ok:
            assert set(record["artifacts"]) == set(ARTIFACT_NAMES)

    def test_enumeration_cap_is_enforced(self, tmp_path):
        config = e2e_config(tmp_path, enumeration_cap=1)
        manifest = run_pipeline(TIME_TRAVEL_NARRATIVE, config, project_id="tt")
        # the two-condition feature exceeds the cap and fails in isolation
        assert "character-interaction" in manifest.failed_features
        assert "pyramid-mini-game" not in manifest.failed_features

    def test_parallel_run_matches_sequential(self, tmp_path):
        sequential = run_pipeline(TIME_TRAVEL_NARRATIVE,
                                  e2e_config(tmp_path / "a"), project_id="tt")
        parallel = run_pipeline(TIME_TRAVEL_NARRATIVE,
                                e2e_config(tmp_path / "b", per_feature_parallelism=4),
                                project_id="tt")
        strip = lambda m: {k: v for k, v in m.to_dict().items()
                           if k not in ("timing", "config")}
        assert strip(sequential) == strip(parallel)


class TestRunDataset:
    def test_two_entry_dataset(self, tmp_path):
        config = e2e_config(tmp_path)
        manifests = run_dataset(FIXTURES / "dataset" / "two_projects.json", config)
        assert [m.project_id for m in manifests] == ["timetravel-mini", "orderhub"]
        aggregate = json.loads(
            (Path(config.output_dir) / "aggregate_report.json").read_text("utf-8"))
        assert aggregate["projects"] == 2
        assert aggregate["acc_syn_mean"] == 1.0
        assert "fundiv_mean" in aggregate

    def test_malformed_entries_skipped(self, tmp_path):
        dataset = tmp_path / "data.json"
        dataset.write_text(json.dumps([
            {"project_id": "good", "narrative": "a time travel adventure story"},
            {"project_id": "bad"},
            "not an object",
        ]))
        entries, skipped = load_dataset(dataset)
        assert [e.project_id for e in entries] == ["good"]
        assert len(skipped) == 2

    def test_entries_with_extra_repository_keys_load(self, tmp_path):
        dataset = tmp_path / "data.json"
        dataset.write_text(json.dumps([{
            "project_id": "repo-1",
            "repository": "example/repo",
            "stars": 120,
            "narrative": "an order flow",
            "features": ["Feature: A\nScenario: S\nGiven a\nWhen b\nThen c"],
        }]))
        entries, skipped = load_dataset(dataset)
        assert skipped == []
        assert entries[0].reference_features[0].startswith("Feature: A")


class TestCompareAgainstReference:
    def test_cover_our_ratio(self, tmp_path):
        labels = tmp_path / "labels.json"
        labels.write_text(json.dumps({
            "generated": [{"feature": f"f{i}", "covered": i != 0} for i in range(10)],
        }))
        summary = compare_against_reference({}, labels)
        assert summary["cover_our"] == pytest.approx(0.9)

    def test_cover_real_func_ratio(self, tmp_path):
        labels = tmp_path / "labels.json"
        labels.write_text(json.dumps({
            "generated": [{"feature": "f", "covered": True}],
            "reference_functions": [{"function": f"r{i}", "covered": i < 14}
                                    for i in range(20)],
        }))
        summary = compare_against_reference({}, labels)
        assert summary["cover_real_func"] == pytest.approx(0.7)

    def test_missing_label_file(self, tmp_path):
        with pytest.raises(LabelFileMissing):
            compare_against_reference({}, tmp_path / "absent.json")
        with pytest.raises(LabelFileMissing):
            compare_against_reference({}, None)

    def test_example_label_fixture(self):
        summary = compare_against_reference(
            {}, FIXTURES / "labels" / "example_labels.json")
        assert summary["cover_our"] == pytest.approx(3 / 4)
        assert summary["cover_real_func"] == pytest.approx(3 / 5)


class TestCli:
    def test_lint_exit_codes(self, tmp_path, capsys):
        clean = tmp_path / "clean.feature"
        clean.write_text("Feature: X\n\n  Scenario: S\n    Given a\n")
        dirty = tmp_path / "dirty.feature"
        dirty.write_text("Feature: X\n")
        assert main(["lint", str(clean)]) == 0
        assert main(["lint", str(clean), str(dirty)]) == 1
        out = capsys.readouterr().out
        assert "no-files-without-scenarios" in out

    def test_lint_json_format(self, tmp_path, capsys):
        dirty = tmp_path / "dirty.feature"
        dirty.write_text("Feature: X\n")
        main(["lint", "--format", "json", str(dirty)])
        payload = json.loads(capsys.readouterr().out)
        assert payload[str(dirty)][0]["rule_id"] == "no-files-without-scenarios"

    def test_ceg_check(self, tmp_path, capsys):
        good = tmp_path / "good.ceg"
        good.write_text("C1: a\nE1: b\nDIR(C1)=E1\n")
        bad = tmp_path / "bad.ceg"
        bad.write_text("C1: a\nE1: b\nE2: c\nDIR(E1)=E2\n")
        assert main(["ceg-check", "--ceg", str(good)]) == 0
        assert main(["ceg-check", "--ceg", str(bad)]) == 1
        assert "EffectAsCause" in capsys.readouterr().out

    def test_review_command(self, tmp_path, capsys):
        out = tmp_path / "reviewed.feature"
        code = main(["review",
                     "--feature", str(FIXTURES / "ftgo" / "draft.feature"),
                     "--ceg", str(FIXTURES / "ftgo" / "order_cancel.ceg"),
                     "--out", str(out)])
        assert code == 0
        assert out.exists()
        report = json.loads(
            out.with_suffix(".feature.report.json").read_text("utf-8"))
        assert len(report["modified"]) == 2
        assert len(report["added"]) == 1

    def test_run_command_exit_zero(self, tmp_path):
        profile = tmp_path / "profile.json"
        profile.write_text(json.dumps({
            "type": "mock",
            "fixtures": str(FIXTURES / "oracle" / "e2e_mock.json")}))
        code = main(["run", "--dataset", str(FIXTURES / "dataset" / "two_projects.json"),
                     "--oracle", str(profile), "--out", str(tmp_path / "out")])
        assert code == 0

    def test_run_without_oracle_is_config_error(self, tmp_path):
        narrative = tmp_path / "n.txt"
        narrative.write_text("words")
        assert main(["run", "--narrative", str(narrative)]) == 2

    def test_run_partial_exit_code(self, tmp_path):
        script = json.loads(
            (FIXTURES / "oracle" / "e2e_mock.json").read_text("utf-8"))
        rules = script["agents"]["AnalyzeUserBehavior"]["rules"]
        script["agents"]["AnalyzeUserBehavior"]["rules"] = [
            r for r in rules if "Pyramid" not in r["when_contains"]]
        profile = tmp_path / "profile.json"
        profile.write_text(json.dumps({"type": "mock", "script": script}))
        narrative = tmp_path / "n.txt"
        narrative.write_text(TIME_TRAVEL_NARRATIVE)
        code = main(["run", "--narrative", str(narrative),
                     "--oracle", str(profile), "--out", str(tmp_path / "out")])
        assert code == 1

    def test_run_with_config_file(self, tmp_path):
        config_file = tmp_path / "config.json"
        config_file.write_text(json.dumps({
            "oracle_profile": {"type": "mock",
                               "fixtures": str(FIXTURES / "oracle" / "e2e_mock.json")},
            "output_dir": str(tmp_path / "out"),
            "max_iters": 5,
            "per_feature_parallelism": 2,
        }))
        narrative = tmp_path / "n.txt"
        narrative.write_text(TIME_TRAVEL_NARRATIVE)
        assert main(["run", "--narrative", str(narrative),
                     "--config", str(config_file)]) == 0
        assert (tmp_path / "out" / "project" / "manifest.json").exists()

    def test_measure_command(self, tmp_path, capsys):
        (tmp_path / "a.feature").write_text(
            "Feature: X\n\n  Scenario: S\n    Given a\n    When b\n    Then c\n")
        report_path = tmp_path / "report.json"
        code = main(["measure", str(tmp_path), "--report", str(report_path)])
        assert code == 0
        report = json.loads(report_path.read_text("utf-8"))
        assert report["acc_syn"]["value"] == 1.0
        assert report["keyword_stats"]["f_num"] == 1
