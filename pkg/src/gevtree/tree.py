"""Decision trees that partition covariate space by GEV log-score impurity drop.

Each node carries a PWM fit of the targets that reached it. Growth is
best-first: every leaf remembers its optimal split and, at each iteration, the
leaf whose split reduces the log score the most is divided. Growth stops when
no leaf has an admissible split, when the best impurity drop falls below
``t_crit``, or after ``max_grow_iterations`` splits.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from . import gev, pwm
from .errors import DimensionMismatch, EmptyDataset, PwmError, RootUnfittable, ZeroParentScore
from .gev import GevParams

log = logging.getLogger(__name__)

# Upper bound on the number of matrix cells materialized at once during the
# split scan (bounded memory for large partitions).
_CHUNK_CELLS = 2_000_000


@dataclass(frozen=True)
class SplitRule:
    """Send ``x[dim] <= threshold`` left and everything else right."""

    dim: int
    threshold: float

    def goes_left(self, x):
        return np.asarray(x)[..., self.dim] <= self.threshold


@dataclass(frozen=True)
class TreeConfig:
    min_partition_size: int = 30
    t_crit: float = 0.01
    max_grow_iterations: int = 40

    def __post_init__(self):
        if self.min_partition_size < 3:
            raise ValueError("min_partition_size must be at least 3")
        if not self.t_crit > 0:
            raise ValueError("t_crit must be positive")
        if self.max_grow_iterations < 1:
            raise ValueError("max_grow_iterations must be at least 1")


@dataclass(eq=False)
class TreeNode:
    params: GevParams
    log_score_total: float
    size: int
    rule: Optional[SplitRule] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    # row indices of the training partition; only populated by fit_tree
    indices: Optional[np.ndarray] = field(default=None, repr=False)
    n_features: Optional[int] = field(default=None, repr=False)

    @property
    def is_leaf(self):
        return self.rule is None

    def iter_nodes(self) -> Iterator["TreeNode"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.append(node.right)
                stack.append(node.left)

    def leaves(self):
        return [n for n in self.iter_nodes() if n.is_leaf]

    def depth(self):
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def n_splits(self):
        return sum(1 for n in self.iter_nodes() if not n.is_leaf)


def impurity_drop(parent_score, left_score, right_score):
    """Relative reduction ``(L_p - L_l - L_r) / L_p`` of the total log score."""
    if parent_score == 0:
        raise ZeroParentScore("parent log score is zero")
    return (parent_score - right_score - left_score) / parent_score


def _total_log_score(y, params):
    return float(np.sum(gev.log_score(y, params)))


def _rank_weighted_sums(g, ys, ks):
    """Rank-weighted target sums for every prefix/suffix split in ``ks``.

    Rows are in covariate order; ``g`` holds each row's rank among the targets
    of the whole partition. For a cut at ``k`` the left child is rows ``< k``
    and a row's rank inside it is the number of earlier rows with smaller
    ``g``; its rank inside the right child is ``g`` minus that count.
    """
    n = ys.size
    n_cand = ks.size
    s1l = np.zeros(n_cand)
    s2l = np.zeros(n_cand)
    s1r = np.zeros(n_cand)
    s2r = np.zeros(n_cand)
    step = max(1, _CHUNK_CELLS // max(n, n_cand))
    for start in range(0, n, step):
        rows = np.arange(start, min(n, start + step))
        less = g[None, :] < g[rows, None]
        before = np.cumsum(less, axis=1)[:, ks - 1].astype(float)
        in_left = rows[:, None] < ks[None, :]
        y = ys[rows, None]
        r_left = np.where(in_left, before, 0.0)
        r_right = np.where(in_left, 0.0, g[rows, None] - before)
        s1l += np.sum(r_left * y, axis=0)
        s2l += np.sum(r_left * (r_left - 1.0) * y, axis=0)
        s1r += np.sum(r_right * y, axis=0)
        s2r += np.sum(r_right * (r_right - 1.0) * y, axis=0)
    return s1l, s2l, s1r, s2r


def _child_scores(ys, ks, mu, sigma, xi, left):
    n = ys.size
    out = np.empty(ks.size)
    step = max(1, _CHUNK_CELLS // n)
    cols = np.arange(n)
    for start in range(0, ks.size, step):
        sl = slice(start, start + step)
        params = GevParams(mu[sl, None], sigma[sl, None], xi[sl, None])
        ls = gev.log_score(ys[None, :], params)
        member = cols[None, :] < ks[sl, None]
        if not left:
            member = ~member
        out[sl] = np.sum(np.where(member, ls, 0.0), axis=1)
    return out


def _scan_dimension(xcol, y, min_size, parent_score):
    """Best ``(drop, threshold)`` along one covariate, or None."""
    n = y.size
    order = np.argsort(xcol, kind="stable")
    xs = xcol[order]
    ys = y[order]
    ks = np.arange(min_size, n - min_size + 1)
    ks = ks[xs[ks - 1] < xs[ks]] if ks.size else ks
    if ks.size == 0:
        return None

    g = np.empty(n, dtype=np.int64)
    g[np.argsort(ys, kind="stable")] = np.arange(n)
    s1l, s2l, s1r, s2r = _rank_weighted_sums(g, ys, ks)
    csum = np.cumsum(ys)
    s0l = csum[ks - 1]
    s0r = csum[-1] - s0l

    def fit(count, s0, s1, s2):
        count = count.astype(float)
        b0 = s0 / count
        b1 = s1 / (count * (count - 1.0))
        b2 = s2 / (count * (count - 1.0) * (count - 2.0))
        return pwm.params_from_moments(b0, b1, b2)

    mul, sigl, xil, okl = fit(ks, s0l, s1l, s2l)
    mur, sigr, xir, okr = fit(n - ks, s0r, s1r, s2r)
    ok = okl & okr
    if not np.any(ok):
        return None
    ks, mul, sigl, xil, mur, sigr, xir = (a[ok] for a in (ks, mul, sigl, xil, mur, sigr, xir))

    left_scores = _child_scores(ys, ks, mul, sigl, xil, left=True)
    right_scores = _child_scores(ys, ks, mur, sigr, xir, left=False)
    drops = impurity_drop(parent_score, left_scores, right_scores)
    # only splits that lower the total log score are eligible
    drops = np.where(left_scores + right_scores < parent_score, drops, -np.inf)
    best = int(np.argmax(drops))
    if not np.isfinite(drops[best]):
        return None
    k = ks[best]
    threshold = 0.5 * (xs[k - 1] + xs[k])
    if not threshold < xs[k]:
        threshold = xs[k - 1]
    return float(drops[best]), float(threshold)


def best_split(x, y, config: TreeConfig, parent_score=None):
    """Optimal split of a partition as ``(SplitRule, drop)``, or None.

    Scans every covariate dimension in order and every midpoint between
    adjacent distinct values. Candidates that leave fewer than
    ``min_partition_size`` observations on either side, or whose children
    cannot be fitted by PWM, are skipped. Ties go to the lower dimension,
    then the lower threshold.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    min_size = config.min_partition_size
    if y.size < 2 * min_size:
        return None
    if parent_score is None:
        try:
            parent_score = _total_log_score(y, pwm.estimate(y))
        except PwmError:
            return None
    if parent_score == 0:
        return None

    best = None
    for dim in range(x.shape[1]):
        found = _scan_dimension(x[:, dim], y, min_size, parent_score)
        if found is not None and (best is None or found[0] > best[1]):
            best = (SplitRule(dim, found[1]), found[0])
    return best


def _make_node(x, y, indices):
    params = pwm.estimate(y[indices])
    score = _total_log_score(y[indices], params)
    return TreeNode(params=params, log_score_total=score, size=indices.size, indices=indices)


def fit_tree(data, config: TreeConfig = TreeConfig()) -> TreeNode:
    """Grow a tree best-first on a dataset with ``covariates`` and ``targets``."""
    x = np.asarray(data.covariates, dtype=float)
    y = np.asarray(data.targets, dtype=float)
    if y.size == 0:
        raise EmptyDataset("cannot fit a tree on an empty dataset")
    if x.ndim == 1:
        x = x[:, None]
    try:
        root = _make_node(x, y, np.arange(y.size))
    except PwmError as exc:
        raise RootUnfittable(f"root partition cannot be fitted: {exc}") from exc
    root.n_features = x.shape[1]

    def candidate(node):
        idx = node.indices
        return best_split(x[idx], y[idx], config, parent_score=node.log_score_total)

    frontier = [(root, candidate(root))]
    for _ in range(config.max_grow_iterations):
        pick = None
        for pos, (node, split) in enumerate(frontier):
            if split is not None and (pick is None or split[1] > frontier[pick][1][1]):
                pick = pos
        if pick is None or frontier[pick][1][1] < config.t_crit:
            break
        node, (rule, drop) = frontier.pop(pick)
        idx = node.indices
        to_left = x[idx, rule.dim] <= rule.threshold
        node.rule = rule
        node.left = _make_node(x, y, idx[to_left])
        node.right = _make_node(x, y, idx[~to_left])
        log.debug("split dim=%d at %.6g (drop %.4g, sizes %d/%d)", rule.dim,
                  rule.threshold, drop, node.left.size, node.right.size)
        frontier.append((node.left, candidate(node.left)))
        frontier.append((node.right, candidate(node.right)))
    return root


def _check_dims(tree, x):
    if x.ndim != 2:
        raise DimensionMismatch("covariates must be a vector or a 2-D matrix")
    expected = tree.n_features
    if expected is not None and x.shape[1] != expected:
        raise DimensionMismatch(f"expected {expected} covariates, got {x.shape[1]}")


def predict_tree(tree: TreeNode, x) -> GevParams:
    """Parameters of the leaf reached by a single covariate vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch("predict_tree takes a single covariate vector")
    _check_dims(tree, x[None, :])
    node = tree
    while not node.is_leaf:
        node = node.left if x[node.rule.dim] <= node.rule.threshold else node.right
    return node.params


def predict_tree_arrays(tree: TreeNode, xs):
    """Route every row of ``xs`` at once; returns ``(mu, sigma, xi)`` arrays."""
    xs = np.asarray(xs, dtype=float)
    _check_dims(tree, xs)
    n = xs.shape[0]
    out = np.empty((3, n))
    stack = [(tree, np.arange(n))]
    while stack:
        node, rows = stack.pop()
        if rows.size == 0:
            continue
        if node.is_leaf:
            out[:, rows] = np.array(node.params.astuple(), dtype=float)[:, None]
            continue
        left = xs[rows, node.rule.dim] <= node.rule.threshold
        stack.append((node.left, rows[left]))
        stack.append((node.right, rows[~left]))
    return out[0], out[1], out[2]
