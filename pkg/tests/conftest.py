import functools

import numpy as np
import pytest

from leastgrad.scenarios import build, load_scenario


@functools.lru_cache(maxsize=None)
def built(name, t_grid=None):
    """Bundled scenario built once per session (shared by several modules)."""
    return build(load_scenario(name), t_grid=t_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
