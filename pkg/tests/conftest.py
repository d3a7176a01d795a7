from pathlib import Path

import pytest

from ctxmine.contextdb import build_database
from ctxmine.ingest import load_all
from ctxmine.model import Context
from ctxmine.schema import load_schema

FIXTURES = Path(__file__).parent / "fixtures"
F1_MANIFEST = FIXTURES / "f1" / "manifest.json"

C_STAR = Context.of({
    "student.age": "14-years",
    "student.gender": "Male",
    "curriculum.program": "Mathematics-grade-9",
})


@pytest.fixture(scope="session")
def f1_schema():
    return load_schema(F1_MANIFEST)


@pytest.fixture(scope="session")
def f1_db(f1_schema):
    return build_database(f1_schema, load_all(f1_schema))


# --- acceptance reporting: one line per criterion in the terminal summary ---

_criteria: dict[int, tuple[str, bool]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    number, title = marker.args
    passed = report.passed and not report.skipped
    prev = _criteria.get(number)
    _criteria[number] = (title, passed if prev is None else prev[1] and passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, passed = _criteria[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}")
