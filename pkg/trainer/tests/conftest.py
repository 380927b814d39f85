"""Shared fixtures and the acceptance-suite terminal summary."""

from __future__ import annotations

from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def toy_corpus_path() -> Path:
    return FIXTURES / "corpus_toy50.jsonl"


@pytest.fixture(scope="session")
def wide_corpus_path() -> Path:
    return FIXTURES / "corpus_wide200.jsonl"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion after the normal summary."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            name = nodeid.split("::")[-1].removeprefix("test_")
            status = "PASS" if outcome == "passed" else "FAIL"
            lines.append((name, status))
    if not lines:
        return
    tw = terminalreporter
    tw.section("acceptance criteria")
    for name, status in sorted(lines):
        tw.write_line(f"{status}  {name.replace('_', ' ')}")
