"""Shared fixtures and the acceptance-criteria summary reporter."""

from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
EXAMPLES = REPO_ROOT / "examples"

# (label, status, detail) tuples collected by the acceptance tests and
# printed as one line per criterion at the end of the run.
_ACCEPTANCE_LINES: list[tuple[str, str, str]] = []


@contextmanager
def criterion(label: str, description: str):
    """Record a PASS/FAIL summary line for one acceptance criterion.

    The body performs the assertions; extra detail can be appended through
    the yielded list (joined with semicolons).
    """
    details: list[str] = []
    try:
        yield details
    except BaseException:
        extra = "; ".join(str(d) for d in details)
        text = f"{description}; {extra}" if extra else description
        _ACCEPTANCE_LINES.append((label, "FAIL", text))
        raise
    extra = "; ".join(str(d) for d in details)
    text = f"{description}; {extra}" if extra else description
    _ACCEPTANCE_LINES.append((label, "PASS", text))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, detail in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(f"{label} {status} - {detail}")


@pytest.fixture(scope="session")
def table23_path() -> Path:
    return EXAMPLES / "table23.json"


@pytest.fixture(scope="session")
def table4_path() -> Path:
    return EXAMPLES / "table4.json"
