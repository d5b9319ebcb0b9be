import math

import pytest

from chemosteady import RadialBall, steady_state

BENCHMARK_MASS = 10 * 4 * math.pi / 3

# (criterion, passed, detail) rows filled in by the acceptance module
ACCEPTANCE_LOG = []


@pytest.fixture(scope="session")
def ball_benchmark():
    return steady_state(BENCHMARK_MASS, 1.0, 1.0, RadialBall(3, 1.0), 401)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LOG:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
