import numpy as np
import pytest
from hypothesis import settings

from curvlab.acceptance import random_form

settings.register_profile("curvlab", max_examples=40, deadline=None)
settings.load_profile("curvlab")


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


@pytest.fixture
def make_form(rng):
    def make(p, q, z=0):
        return random_form(rng, p, q, z)

    return make


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
