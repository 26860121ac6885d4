import numpy as np
import pytest

_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def record_acceptance(name: str) -> None:
    """Called by acceptance tests on success; failures are recorded by the
    hook below so every criterion prints one PASS/FAIL line."""
    _ACCEPTANCE_RESULTS.append((name, "PASS"))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or "test_acceptance" not in item.nodeid:
        return
    if report.failed:
        name = item.function.__doc__ or item.name
        _ACCEPTANCE_RESULTS.append((name.strip().splitlines()[0], "FAIL"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, status in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{status}] {name}")


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))
