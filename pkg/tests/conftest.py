import time

import numpy as np
import pytest

from liesub.liegroup import special_unitary

_START = time.perf_counter()
ACCEPTANCE_LINES: list[str] = []
SUITE_LIMIT_S = 300.0


def su2_u(k):
    """Hand-written u1, u2, u3 (independent of the library basis)."""
    return {
        1: np.array([[1j, 0], [0, -1j]]),
        2: np.array([[0, 1], [-1, 0]], dtype=complex),
        3: np.array([[0, 1j], [1j, 0]]),
    }[k]


@pytest.fixture
def su2():
    return special_unitary(2)


@pytest.fixture
def su3():
    return special_unitary(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def elapsed() -> float:
    return time.perf_counter() - _START


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    total = elapsed()
    ok = total < SUITE_LIMIT_S
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
    terminalreporter.write_line(
        f"{'PASS' if ok else 'FAIL'} AC7b full suite wall time {total:.1f} s (limit {SUITE_LIMIT_S:.0f} s)")


def pytest_sessionfinish(session, exitstatus):
    if ACCEPTANCE_LINES and elapsed() >= SUITE_LIMIT_S and exitstatus == 0:
        session.exitstatus = 1
