import pytest

from boxlogic.boxworld import BoxShape
from boxlogic.logic import build_poset
from boxlogic.questions import generate_logic
from boxlogic.states import enumerate_two_valued


@pytest.fixture(scope="session")
def qs22():
    return generate_logic(BoxShape(2, 2))


@pytest.fixture(scope="session")
def poset22(qs22):
    return build_poset(qs22)


@pytest.fixture(scope="session")
def poly22(qs22):
    return qs22.algebra.polytope


@pytest.fixture(scope="session")
def two_valued22(poly22):
    return enumerate_two_valued(poly22)


@pytest.fixture(scope="session")
def qs12():
    return generate_logic(BoxShape(1, 2))


@pytest.fixture(scope="session")
def poset12(qs12):
    return build_poset(qs12)


CRITERIA: dict[int, bool] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if CRITERIA[n] else 'FAIL'}")
