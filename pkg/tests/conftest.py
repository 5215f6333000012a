import numpy as np
import pytest

from thinsteklov.curve import CurveSpec, build_arclength_curve


@pytest.fixture(scope="session")
def circle():
    return build_arclength_curve(CurveSpec.circle(1.0), 512)


@pytest.fixture(scope="session")
def ellipse():
    return build_arclength_curve(CurveSpec.ellipse(2.0, 1.0), 512)


@pytest.fixture(scope="session")
def wobbly():
    # three harmonics, convex
    spec = CurveSpec.fourier([0, 1, 0.1, 0], [0, 0, 0, 0.05], [0, 0, 0.08, 0], [0, 1, 0, 0.06])
    return build_arclength_curve(spec, 512)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
