import numpy as np
import pytest

from seamless_penner import genus2, octahedron, tetrahedron, torus_grid, torus_of_revolution

# filled by test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tet():
    return tetrahedron()


@pytest.fixture
def octa():
    return octahedron()


@pytest.fixture
def grid2():
    return torus_grid(2, 2)


@pytest.fixture
def grid3():
    return torus_grid(3, 3)


@pytest.fixture
def torus():
    return torus_of_revolution()


@pytest.fixture(scope="session")
def g2():
    return genus2()
