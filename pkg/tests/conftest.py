import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lagmc.grid import GridFunction, GridSpec

settings.register_profile("lagmc", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lagmc")


def quad(Q):
    Q = np.asarray(Q, float)
    return lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, Q, x)


def power(q):
    return lambda x: np.linalg.norm(x, axis=-1) ** q / q


def sample(n, radius, h, fn):
    return GridFunction.from_callable(GridSpec.centered(n, radius, h), fn)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines, echoed in the terminal summary so they survive output capture
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
