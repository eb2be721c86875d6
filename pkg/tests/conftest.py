import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "relkep", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
import os

settings.register_profile("stress", deadline=None, max_examples=1000, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("RELKEP_HYPOTHESIS_PROFILE", "relkep"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
