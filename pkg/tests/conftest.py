import json
import sys
from pathlib import Path

import pytest

from rcc8.algebra import default_table
from rcc8.neighborhood import default_graph

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def table():
    return default_table()


@pytest.fixture(scope="session")
def graph():
    return default_graph()


@pytest.fixture(scope="session")
def reference_responses():
    return json.loads((FIXTURES / "reference_responses.json").read_text(encoding="utf-8"))


@pytest.fixture
def table_doc():
    return json.loads(json.dumps(default_table().to_document()))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
