import numpy as np
import pytest

from voronoi_blocks import build_tessellation, make_point_set


def tessellate(points, bounds, quantum=None, adjacency="vertex", method="auto"):
    ps = make_point_set(points, bounds=bounds, quantum=quantum)
    return build_tessellation(ps, adjacency=adjacency, method=method)


@pytest.fixture
def tess():
    return tessellate


@pytest.fixture
def cc_1239():
    # cells [0,1.5] [1.5,2.5] [2.5,6] [6,10] -> 3, 2, 7, 8 quanta
    return tessellate([1.0, 2.0, 3.0, 9.0], [(0.0, 10.0)], quantum=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def record_acceptance(number, passed, detail):
    line = f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
