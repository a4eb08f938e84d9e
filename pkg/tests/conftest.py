import os

import pytest

FULL = os.environ.get("MAXID_ACCEPTANCE_FULL", "") not in ("", "0")

#: criterion number -> (status, detail), filled by the acceptance tests
CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs longer than a few seconds")


@pytest.fixture(scope="session")
def full_scale():
    """Whether the acceptance suite runs at full desk scale."""
    return FULL


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        status, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:2d}: {status:<4s} {detail}")
