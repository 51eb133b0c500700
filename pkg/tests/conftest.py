import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bergman_lab.kernel import build_kernel, suggest_n_max

settings.register_profile(
    "lab", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "lab"))


@pytest.fixture(scope="session")
def kernel_small():
    """ExpDisk(1) kernel good up to r = 0.9."""
    return build_kernel(1.0, suggest_n_max(1.0, 0.9))


@pytest.fixture(scope="session")
def kernel_mid():
    """ExpDisk(1) kernel good up to r = 0.99**2."""
    return build_kernel(1.0, suggest_n_max(1.0, 0.99 ** 2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def record_criterion():
    from bergman_lab.experiments import CRITERIA

    def record(c: int, passed: bool, detail: str) -> bool:
        line = f"criterion {c:2d} ({CRITERIA[c]}): {'PASS' if passed else 'FAIL'} - {detail}"
        print(line)
        ACCEPTANCE_LINES[c] = line
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for c in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[c])
