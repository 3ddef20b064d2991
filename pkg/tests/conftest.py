import pytest

from rydcp.atomic import AtomicState
from rydcp.em import VACUUM, LayerStack
from rydcp.materials import GrapheneParams, KuboGraphene, NonlocalGraphene

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def graphene():
    return LayerStack((VACUUM, VACUUM), (KuboGraphene(GrapheneParams(0.1, 4e12)),))


@pytest.fixture(scope="session")
def graphene_nonlocal():
    return LayerStack((VACUUM, VACUUM), (NonlocalGraphene(GrapheneParams(0.1, 4e12)),))


@pytest.fixture(scope="session")
def vacuum():
    return LayerStack((VACUUM, VACUUM))


def nS(n):
    return AtomicState(n, 0, 0.5)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
