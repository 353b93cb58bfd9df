import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

CORPUS = HERE.parent / "corpus"


@pytest.fixture
def corpus():
    return CORPUS


def read_term(name: str):
    from bimorphic.parser import parse_expr

    return parse_expr((CORPUS / name).read_text())


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import VERDICTS

    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
