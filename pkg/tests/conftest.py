from pathlib import Path

import pytest

from fkcqa.textio import parse_db, parse_problem

FIXTURES = Path(__file__).parent / "fixtures"


def load_problem(name: str):
    return parse_problem((FIXTURES / f"{name}.problem").read_text())


def load_db(name: str, spec):
    return parse_db((FIXTURES / f"{name}.db").read_text(), spec.schemas)


def staircase(n: int, box: str, with_o1: bool = True) -> str:
    """N(b_i, c, i), N(b_i, d, i+1) for i <= n, then N(b_{n+1}, box, n+1), plus O(1)."""
    lines = []
    for i in range(1, n + 1):
        lines += [f"N(b{i}, c, {i})", f"N(b{i}, d, {i + 1})"]
    lines.append(f"N(b{n + 1}, {box}, {n + 1})")
    if with_o1:
        lines.append("O(1)")
    return "\n".join(lines) + "\n"


@pytest.fixture
def fixture_problem():
    return load_problem


@pytest.fixture
def fixtures_dir():
    return FIXTURES


# one line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
