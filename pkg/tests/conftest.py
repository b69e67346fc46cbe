from __future__ import annotations

from pathlib import Path

import pytest

from irqav.model import parse_program

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "irqav" / "fixtures"
CORPUS = FIXTURES / "corpus"
DEVVAL = FIXTURES / "devval.c"


def corpus_files() -> list[Path]:
    return sorted(CORPUS.glob("*.c"))


@pytest.fixture(scope="session")
def devval_src() -> str:
    return DEVVAL.read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def devval(devval_src):
    return parse_program(devval_src)


# acceptance results, filled by test_acceptance and echoed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
