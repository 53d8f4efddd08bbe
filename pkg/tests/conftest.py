import numpy as np
import pytest

from frond.graphcore import Graph, complete_graph, path_graph, random_graph


@pytest.fixture
def k2() -> Graph:
    return complete_graph(2)


@pytest.fixture
def p3() -> Graph:
    return path_graph(3)


@pytest.fixture
def g5() -> Graph:
    """Small weighted graph with an odd cycle, so the walk is aperiodic."""
    return Graph.from_edges(5, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 4, 1.5),
                                (4, 0, 1.0), (1, 3, 0.5)])


@pytest.fixture
def g10() -> Graph:
    return random_graph(10, p=0.3, seed=3)


@pytest.fixture
def x0_k2() -> np.ndarray:
    return np.array([[1.0], [0.0]])


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number].line())
