import numpy as np
import pytest

from lenslesshsi.core import FilterFunction, Psf, SystemModel


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_model(rng, scene=(12, 12), k=4, psf_shape=(5, 5), sensor=None):
    sensor = sensor or scene
    psf = Psf(rng.random(psf_shape))
    filt = FilterFunction(rng.random((k,) + tuple(sensor)))
    return SystemModel(psf, filt, scene)


@pytest.fixture
def small_model(rng):
    return random_model(rng)


# One line per acceptance criterion, echoed in the terminal summary even when
# output is captured.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
