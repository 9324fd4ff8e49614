import numpy as np
import pytest

from smoothdt.tree import random_tree

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_trees():
    gen = np.random.default_rng(7)
    return [random_tree(int(gen.integers(3, 8)), int(gen.integers(1, 9)), gen) for _ in range(25)]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
