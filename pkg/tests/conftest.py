import functools

import numpy as np
import pytest

from hyperspec.eigensolve import solve_lowest
from hyperspec.fem import build_forms
from hyperspec.geometry import EuclideanBox, EuclideanDisk, GeodesicBall, HalfSpaceBox
from hyperspec.mesh import generate, refine


@functools.lru_cache(maxsize=None)
def spectrum_of(kind: str, target_h: float, levels: int, count: int):
    domains = {
        "square": EuclideanBox((0.0, 0.0), (1.0, 1.0)),
        "disk": EuclideanDisk((0.0, 0.0), 1.0),
        "hbox": HalfSpaceBox((0.0, 1.0), (1.0, 2.0)),
        "ball1": GeodesicBall(1.0),
        "ball05": GeodesicBall(0.5),
    }
    d = domains[kind]
    m = generate(d, target_h)
    for _ in range(levels):
        m = refine(m)
    metric = "hyperbolic" if d.hyperbolic else "euclidean"
    return solve_lowest(build_forms(m, metric, 2), count, mesh=m)


@pytest.fixture(scope="session")
def hbox_spectrum():
    return spectrum_of("hbox", 0.1, 1, 12)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
