import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("qkr", deadline=None, max_examples=40)
settings.load_profile("qkr")

# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture
def packet():
    from qkr.core import make_gaussian_packet

    def make(x0=math.pi / 2, sigma=0.1, beta=0.0, n=512):
        return make_gaussian_packet(x0, sigma, beta, n)

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
