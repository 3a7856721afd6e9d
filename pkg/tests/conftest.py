import pytest

from lopsim.graph import BLANK, build_graph
from lopsim.lop import Labeling, locally_optimal_cut


def labeled(g, labels):
    return Labeling(list(labels), {he: BLANK for he in g.half_edges()})


@pytest.fixture(scope="session")
def cut3():
    return locally_optimal_cut(3)


@pytest.fixture(scope="session")
def cut2():
    return locally_optimal_cut(2)


@pytest.fixture
def triangle():
    return build_graph([(0, 1), (1, 2), (0, 2)], 3)


@pytest.fixture
def petersen():
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return build_graph(outer + spokes + inner, 10)


# one line per acceptance criterion, printed after the run
CRITERIA = {}


def record_criterion(number, ok, detail):
    CRITERIA[number] = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    print(CRITERIA[number])


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[number])
