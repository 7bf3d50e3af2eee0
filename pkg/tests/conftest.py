import sys

import numpy as np
import pytest

from choquard_lab.bubbles import Bubble, bubble_profile
from choquard_lab.radial import RadialGrid

# (N, mu) pairs with mpmath reference values
PAIRS = [(3, 1.0), (3, 2.0), (4, 2.0), (5, 2.0)]


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    monkeypatch.delenv("CHOQUARD_LAB_CACHE", raising=False)


@pytest.fixture(scope="session")
def grids():
    cache = {}

    def get(N, n=2048):
        key = (N, n)
        if key not in cache:
            cache[key] = RadialGrid(N, n)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def bubble_on(grid, mu, lam=1.0):
    b = Bubble(grid.dim, mu, lam)
    return b, bubble_profile(b, grid)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k][1])
