from __future__ import annotations

import pytest

from feec import meshes


@pytest.fixture(scope="session")
def two_triangles():
    return meshes.two_triangles()


@pytest.fixture(scope="session")
def square():
    return meshes.unit_square(2)


@pytest.fixture(scope="session")
def disk():
    return meshes.disk()


@pytest.fixture(scope="session")
def annulus():
    return meshes.annulus()


@pytest.fixture(scope="session")
def two_tets():
    from feec.simplicial import build_complex

    return build_complex([(0, 1, 2, 3), (1, 2, 3, 4)], [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
