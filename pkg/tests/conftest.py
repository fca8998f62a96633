import numpy as np
import pytest

from gevtree import gev
from gevtree.dataset import Dataset
from gevtree.gev import GevParams


def make_two_regime(seed=0, n_each=500, xi=0.1, shift=5.0):
    """Covariate in [0, 1]; GEV(0, 1, xi) below 0.5 and GEV(shift, 1, xi) above."""
    rng = np.random.default_rng(seed)
    x_low = rng.uniform(0.0, 0.5, n_each)
    x_high = rng.uniform(0.5, 1.0, n_each)
    y_low = gev.sample(GevParams(0.0, 1.0, xi), n_each, rng=rng)
    y_high = gev.sample(GevParams(shift, 1.0, xi), n_each, rng=rng)
    x = np.concatenate([x_low, x_high])
    y = np.concatenate([y_low, y_high])
    order = rng.permutation(x.size)
    return Dataset(x[order, None], y[order], ("x",))


def assert_partition_invariants(tree, data, min_size):
    """Children are disjoint and exhaustive and every leaf respects the minimum size."""
    x = np.asarray(data.covariates)
    stack = [(tree, np.arange(len(data)))]
    while stack:
        node, rows = stack.pop()
        assert node.size == rows.size
        if node.is_leaf:
            assert rows.size >= min_size or node is tree
            continue
        left = x[rows, node.rule.dim] <= node.rule.threshold
        assert left.any() and (~left).any()
        assert node.left.size + node.right.size == node.size
        stack.append((node.left, rows[left]))
        stack.append((node.right, rows[~left]))


@pytest.fixture(scope="session")
def two_regime():
    return make_two_regime()


# -- acceptance summary ------------------------------------------------------

ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    """Store the outcome line for one acceptance criterion."""
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES[number] = f"[{status}] criterion {number}: {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
