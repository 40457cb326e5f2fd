"""Shared fixtures for the test suite."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from requireceg.oracle import MockOracle

FIXTURES = Path(__file__).parent / "fixtures"

MINIMAL_FEATURE = "Feature: X\nScenario: S\nGiven a\nWhen b\nThen c"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def minimal_feature() -> str:
    return MINIMAL_FEATURE


@pytest.fixture
def ftgo_draft() -> str:
    return (FIXTURES / "ftgo" / "draft.feature").read_text(encoding="utf-8")


@pytest.fixture
def ftgo_ceg() -> str:
    return (FIXTURES / "ftgo" / "order_cancel.ceg").read_text(encoding="utf-8")


@pytest.fixture
def time_travel_ceg() -> str:
    return (FIXTURES / "time_travel.ceg").read_text(encoding="utf-8")


@pytest.fixture
def corpus_sources() -> list[str]:
    return [path.read_text(encoding="utf-8")
            for path in sorted((FIXTURES / "corpus").glob("*.feature"))]


@pytest.fixture
def e2e_profile() -> dict:
    return {"type": "mock", "fixtures": str(FIXTURES / "oracle" / "e2e_mock.json")}


@pytest.fixture
def all_yes_oracle() -> MockOracle:
    return MockOracle({"agents": {"ReasoningIQ": {"default": {"answer": {
        "verdict": "Yes",
        "reasoning": "the requirement states this coupling explicitly",
    }}}}})


def make_oracle(agents: dict) -> MockOracle:
    return MockOracle({"agents": agents})


@pytest.fixture
def readability_expected() -> dict:
    return json.loads((FIXTURES / "readability" / "expected.json").read_text("utf-8"))
