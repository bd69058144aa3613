from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def rng():
    return np.random.default_rng(1234)



_criteria: list[tuple[str, str, str]] = []


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion and print it."""
    def record(label, description):
        request.node._criterion = (label, description)
    yield record
    label, description = getattr(request.node, "_criterion", (request.node.name, ""))
    rep = getattr(request.node, "rep_call", None)
    status = "PASS" if rep is not None and rep.passed else "FAIL"
    _criteria.append((label, status, description))
    print(f"\n{label}: {status} - {description}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, description in sorted(_criteria, key=lambda c: int(c[0].split()[-1])):
        terminalreporter.write_line(f"{label}: {status} - {description}")
