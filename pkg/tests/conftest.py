import pytest

from cornerindex.meshgen import triangulate
from cornerindex.polygeom import annulus_A, unit_square


@pytest.fixture(scope="session")
def A():
    return annulus_A()


@pytest.fixture(scope="session")
def square():
    return unit_square()


@pytest.fixture(scope="session")
def mesh_A(A):
    return triangulate(A, 0.25, grading=1.0)


@pytest.fixture(scope="session")
def mesh_square(square):
    return triangulate(square, 0.5, grading=1.0, structured=True)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(LINES):
            terminalreporter.write_line(LINES[n])
