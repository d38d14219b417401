import numpy as np
import pytest

from specgcf.dataset import InteractionDataset
from specgcf.graph import build_adjacency, normalize_adjacency


def random_bipartite(num_users, num_items, density, seed, connect=True):
    """Random interactions; with ``connect`` every user and item gets >= 1 edge."""
    rng = np.random.default_rng(seed)
    hits = rng.random((num_users, num_items)) < density
    if connect:
        for u in range(num_users):
            if not hits[u].any():
                hits[u, rng.integers(num_items)] = True
        for i in range(num_items):
            if not hits[:, i].any():
                hits[rng.integers(num_users), i] = True
    users, items = np.nonzero(hits)
    return InteractionDataset(num_users, num_items, users, items)


def random_norm_adj(num_users, num_items, density, seed, connect=True):
    return normalize_adjacency(build_adjacency(random_bipartite(num_users, num_items, density, seed, connect)))


@pytest.fixture
def small_adj():
    return random_norm_adj(12, 18, 0.2, seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report: one PASS/FAIL line each, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
