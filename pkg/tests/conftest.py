import numpy as np
import pytest

from structcl.graph import DataGraph


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return DataGraph.from_edges(n, np.stack([iu[keep], ju[keep]], 1))


def complete_graph(n):
    iu, ju = np.triu_indices(n, 1)
    return DataGraph.from_edges(n, np.stack([iu, ju], 1))


@pytest.fixture
def k3():
    return complete_graph(3)


@pytest.fixture
def k4():
    return complete_graph(4)


@pytest.fixture
def two_community_12():
    """Two 6-node communities (dense inside, one bridge) with noisy attributes."""
    rng = np.random.default_rng(12)
    edges = []
    for base in (0, 6):
        for i in range(6):
            for j in range(i + 1, 6):
                if (i + j) % 4 != 3:
                    edges.append((base + i, base + j))
    edges.append((2, 8))
    labels = np.repeat([0, 1], 6)
    attrs = np.eye(2)[labels] + 0.3 * rng.normal(size=(12, 2))
    attrs = np.hstack([attrs, rng.normal(size=(12, 3))])
    return DataGraph.from_edges(12, edges, attrs, labels)


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """``criterion(name, ok, detail)`` records a pass/fail line, then asserts ``ok``."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def check(name, ok, detail=""):
        lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, f"{name}: {detail}"
    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
