import json

import pytest

from persuader.pack import builtin_pack_path, load_pack

ACCEPTANCE_PREFIX = "tests/test_acceptance.py"

_results: dict[str, str] = {}


@pytest.fixture(scope="session")
def pack_path():
    return builtin_pack_path()


@pytest.fixture(scope="session")
def pack(pack_path):
    return load_pack(pack_path)


@pytest.fixture()
def pack_document(pack_path):
    """Fresh mutable copy of the shipped pack document."""
    return json.loads(pack_path.read_text(encoding="utf-8"))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.nodeid.startswith(ACCEPTANCE_PREFIX):
        _results[item.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in sorted(_results.items()):
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
