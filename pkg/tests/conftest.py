import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from weightflow import kernels, micro, presets

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def phi():
    return kernels.kernel_sin2(presets.RADIUS)


@pytest.fixture(scope="session")
def m1(phi):
    return kernels.source_m1(phi, presets.BETA)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def preset_state(N, convention="N"):
    return micro.initial_state_from_density(N, presets.two_gaussian, convention)


CRITERIA: list = []


@pytest.fixture
def criterion():
    """Record one acceptance line, print it and fail the test if it did not pass."""

    def record(number: int, ok: bool, detail: str, seconds: float):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail} ({seconds:.1f} s)"
        CRITERIA.append((number, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(CRITERIA):
            terminalreporter.write_line(line)
