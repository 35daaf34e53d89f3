import math

import numpy as np
import pytest

# closed forms for the prolate spheroid with semiaxes (2, 1, 1)
SPHEROID_V1 = 4 * (1 + math.log(2 + math.sqrt(3)) / (2 * math.sqrt(3)))
SPHEROID_V2 = math.pi + 4 * math.pi**2 / (3 * math.sqrt(3))
SPHEROID_V3 = 8 * math.pi / 3


def log_uniform(rng, lo, hi, size):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


@pytest.fixture
def rng():
    return np.random.default_rng(20190507)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    def record(number, ok, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
