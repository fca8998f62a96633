"""Bootstrap-aggregated ensembles of extreme trees.

Each member is grown on a bootstrap resample of ``ceil(resample_ratio * N)``
rows. Predictions average the member parameter triples component-wise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyDataset, MemberFitFailure, RootUnfittable
from .gev import GevParams
from .tree import TreeConfig, TreeNode, fit_tree, predict_tree_arrays

log = logging.getLogger(__name__)

MAX_MEMBER_RETRIES = 5


@dataclass(frozen=True)
class EnsembleConfig:
    k_members: int = 50
    resample_ratio: float = 1.0
    seed: int = 0
    tree_config: TreeConfig = field(default_factory=TreeConfig)

    def __post_init__(self):
        if self.k_members < 1:
            raise ValueError("k_members must be at least 1")
        if not self.resample_ratio > 0:
            raise ValueError("resample_ratio must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class EnsembleModel:
    members: tuple
    config: EnsembleConfig
    covariate_schema: tuple

    def __post_init__(self):
        if not self.members:
            raise ValueError("an ensemble needs at least one member")
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "covariate_schema", tuple(self.covariate_schema))

    @property
    def n_features(self):
        return len(self.covariate_schema)


def member_rng(seed, member, attempt=0):
    """Generator for one member, independent of how members are scheduled."""
    return np.random.default_rng([seed, member, attempt])


def bootstrap_sample(data, ratio, rng):
    """Draw ``ceil(ratio * N)`` rows with replacement."""
    n = len(data)
    if n == 0:
        raise EmptyDataset("cannot resample an empty dataset")
    if not ratio > 0:
        raise ValueError("ratio must be positive")
    rows = rng.integers(0, n, size=math.ceil(ratio * n))
    return data.take(rows)


def _fit_member(data, config, member):
    for attempt in range(MAX_MEMBER_RETRIES + 1):
        rng = member_rng(config.seed, member, attempt)
        sample = bootstrap_sample(data, config.resample_ratio, rng)
        try:
            tree = fit_tree(sample, config.tree_config)
        except RootUnfittable as exc:
            log.warning("member %d attempt %d unfittable: %s", member, attempt, exc)
            continue
        tree.n_features = data.n_features
        # training row indices refer to the resample and are not kept
        for node in tree.iter_nodes():
            node.indices = None
        return tree
    raise MemberFitFailure(f"member {member} could not be fitted after "
                           f"{MAX_MEMBER_RETRIES} retries")


def fit_ensemble(data, config: EnsembleConfig = EnsembleConfig(), n_jobs=1) -> EnsembleModel:
    """Fit ``k_members`` trees on independent bootstrap resamples.

    The result depends only on ``data`` and ``config``: member ``k`` always
    draws from the generator seeded by ``(seed, k)``, so ``n_jobs`` does not
    change the model.
    """
    if len(data) == 0:
        raise EmptyDataset("cannot fit an ensemble on an empty dataset")
    if n_jobs == 1:
        members = [_fit_member(data, config, k) for k in range(config.k_members)]
    else:
        from joblib import Parallel, delayed

        members = Parallel(n_jobs=n_jobs)(
            delayed(_fit_member)(data, config, k) for k in range(config.k_members))
    return EnsembleModel(members, config, data.column_names)


def _as_matrix(model, xs):
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1 and model.n_features == 1:
        xs = xs[:, None]
    if xs.ndim != 2:
        raise DimensionMismatch("covariates must be a 2-D matrix")
    if xs.shape[1] != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} covariates, got {xs.shape[1]}")
    return xs


def predict_arrays(model: EnsembleModel, xs):
    """Averaged ``(mu, sigma, xi)`` arrays for every row of ``xs``."""
    xs = _as_matrix(model, xs)
    total = np.zeros((3, xs.shape[0]))
    for tree in model.members:
        total += np.stack(predict_tree_arrays(tree, xs))
    total /= len(model.members)
    return total[0], total[1], total[2]


def predict(model: EnsembleModel, x) -> GevParams:
    """Averaged parameters for one covariate vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch("predict takes a single covariate vector")
    mu, sigma, xi = predict_arrays(model, x[None, :])
    return GevParams(float(mu[0]), float(sigma[0]), float(xi[0]))


def predict_series(model: EnsembleModel, xs):
    """Row-wise :func:`predict`; returns a list of :class:`GevParams`."""
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        return []
    mu, sigma, xi = predict_arrays(model, xs)
    return [GevParams(float(a), float(b), float(c)) for a, b, c in zip(mu, sigma, xi)]
