import pytest

from mirrorfhn.model import I_STAR, ModelParams

REGION_I = (0.0, 0.03)
REGION_IV = (-0.3, -0.1586)
REGION_V = (-1.5, -1.8682)
TYPE_II = (-1.0, -0.3)
TYPE_III = (-1.5, 0.5)


def at_istar(point, eps=0.02, i_app=I_STAR):
    return ModelParams(eps, i_app, *point)


@pytest.fixture
def p_iv():
    return at_istar(REGION_IV)


@pytest.fixture
def p_i():
    return at_istar(REGION_I)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
