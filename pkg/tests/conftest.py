import math
import os

import hypothesis
import numpy as np
import pytest

from muskat.grid import make_grid, random_bandlimited

hypothesis.settings.register_profile("default", max_examples=25, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=100, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


def acceptance_line(label: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture
def grid64():
    return make_grid(math.pi, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def bandlimited(grid, kmax, amplitude, seed):
    return random_bandlimited(grid, kmax, amplitude, np.random.default_rng(seed))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
