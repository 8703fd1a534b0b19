import numpy as np
import pytest
from hypothesis import settings

from lensless.data import load_fixture

settings.register_profile("ci", max_examples=50, deadline=None)
settings.register_profile("dev", max_examples=20, deadline=None)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def camera64():
    return load_fixture("camera64.pgm")


@pytest.fixture(scope="session")
def camera128():
    return load_fixture("camera128.pgm")


@pytest.fixture(scope="session")
def camera256():
    return load_fixture("camera256.pgm")


@pytest.fixture(scope="session")
def astronaut64():
    return load_fixture("astronaut64.ppm")


@pytest.fixture
def rng():
    return np.random.default_rng(20140101)


def block_image(n, corners, amplitudes, edge=8):
    """Zero image with constant edge x edge squares at the given top-left corners.

    With 8x8 patches at stride 4 and corners on the 4-pixel grid, each square
    touches 9 patches holding 1 + 4*5 + 4*25 = 121 non-zero DCT coefficients.
    """
    x = np.zeros((n, n))
    for (r, c), a in zip(corners, amplitudes):
        x[r:r + edge, c:c + edge] += a
    return x


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
