from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

from stackdec import kernels
from stackdec.payoff import PayoffMatrices

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES: list[str] = []

BACKENDS = sorted(kernels.available_backends())


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


@pytest.fixture
def derived_game():
    """Zero-cost, Cap = Esc = 1 game with v_a = [10, 1], v_d = [-10, -1]."""
    return PayoffMatrices.from_arrays([[10, -1], [-10, 1]], [[-10, 1], [10, -1]])


def random_game(rng: np.random.Generator, n: int) -> PayoffMatrices:
    return PayoffMatrices.from_arrays(rng.uniform(-10, 10, (n, n)), rng.uniform(-10, 10, (n, n)))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
