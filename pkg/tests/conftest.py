import functools

import pytest
from hypothesis import HealthCheck, settings

from tsplp import build_model, generate_random

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# lines collected by the acceptance suite, printed after the run
ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def cached_model(n, seed=0, symmetric=False):
    return build_model(generate_random(n, seed, symmetric))


@pytest.fixture(scope="session")
def model5():
    return cached_model(5)


@pytest.fixture(scope="session")
def model6():
    return cached_model(6)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
