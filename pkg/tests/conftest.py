"""Shared fixtures and the acceptance-suite terminal summary."""

from __future__ import annotations

from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def netflix_dataset():
    from tabprompt.ingest import load_dataset

    return load_dataset(FIXTURES / "netflix.csv", "netflix", target_hint="Subscription Type")


@pytest.fixture(scope="session")
def amazon_dataset():
    from tabprompt.ingest import load_dataset

    return load_dataset(FIXTURES / "amazon.csv", "amazon", target_hint="overall")


@pytest.fixture(scope="session")
def diabetes_dataset():
    from tabprompt.ingest import load_dataset

    return load_dataset(FIXTURES / "diabetes.csv", "diabetes", target_hint="Outcome")


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
