"""Data model for covariate/target pairs and high-resolution time series,
plus block-extrema extraction and calendar covariates."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Optional, Sequence
from zoneinfo import ZoneInfo

import numpy as np

from .errors import DimensionMismatch, EmptySeries


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Covariate matrix ``[N, M]`` paired with block-maxima targets ``[N]``.

    ``instants`` optionally carries one timestamp (``datetime64[s]``, UTC) per row.
    """

    covariates: np.ndarray
    targets: np.ndarray
    column_names: tuple = ()
    instants: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        x = np.array(self.covariates, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.array(self.targets, dtype=float).reshape(-1)
        if x.ndim != 2 or x.shape[0] != y.size:
            raise DimensionMismatch(f"{x.shape[0]} covariate rows but {y.size} targets")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("dataset values must be finite")
        names = tuple(self.column_names) or tuple(f"x{i}" for i in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise DimensionMismatch(f"{len(names)} column names for {x.shape[1]} columns")
        object.__setattr__(self, "covariates", _readonly(x))
        object.__setattr__(self, "targets", _readonly(y))
        object.__setattr__(self, "column_names", names)
        if self.instants is not None:
            t = np.array(self.instants, dtype="datetime64[s]")
            if t.size != y.size:
                raise DimensionMismatch("instants must have one entry per row")
            object.__setattr__(self, "instants", _readonly(t))

    def __len__(self):
        return self.targets.size

    @property
    def n_features(self):
        return self.covariates.shape[1]

    def take(self, rows):
        rows = np.asarray(rows)
        return Dataset(self.covariates[rows], self.targets[rows], self.column_names,
                       None if self.instants is None else self.instants[rows])


@dataclass(frozen=True)
class TimeSeries:
    """Sub-interval observations with strictly increasing UTC timestamps."""

    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.timestamps, dtype="datetime64[s]")
        v = np.array(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise DimensionMismatch("timestamps and values must be 1-D of equal length")
        if t.size > 1 and not np.all(np.diff(t) > np.timedelta64(0, "s")):
            raise ValueError("timestamps must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "timestamps", _readonly(t))
        object.__setattr__(self, "values", _readonly(v))

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class BlockSpec:
    """Non-overlapping blocks of ``block_length`` starting at ``origin`` past
    midnight UTC. Blocks with fewer than ``min_count`` observations are dropped."""

    block_length: dt.timedelta = dt.timedelta(days=1)
    origin: dt.timedelta = dt.timedelta(0)
    mode: str = "max"
    min_count: int = 12

    def __post_init__(self):
        if self.block_length <= dt.timedelta(0):
            raise ValueError("block_length must be positive")
        if self.mode not in ("max", "min"):
            raise ValueError("mode must be 'max' or 'min'")
        if self.min_count < 1:
            raise ValueError("min_count must be at least 1")


@dataclass(frozen=True)
class BlockExtrema:
    starts: np.ndarray
    values: np.ndarray
    counts: np.ndarray
    # (block start, observation count) for every block below min_count
    dropped: tuple = ()


def extract_block_extrema(series: TimeSeries, spec: BlockSpec = BlockSpec()) -> BlockExtrema:
    """Per-block maxima (or minima) of a time series."""
    if len(series) == 0:
        raise EmptySeries("time series is empty")
    length = np.timedelta64(int(spec.block_length.total_seconds()), "s")
    origin = np.datetime64("1970-01-01T00:00:00") + np.timedelta64(
        int(spec.origin.total_seconds()), "s")
    block = (series.timestamps - origin) // length
    keys, first, counts = np.unique(block, return_index=True, return_counts=True)
    values = series.values if spec.mode == "max" else -series.values
    extrema = np.maximum.reduceat(values, first)
    if spec.mode == "min":
        extrema = -extrema
    starts = origin + keys * length
    keep = counts >= spec.min_count
    dropped = tuple((starts[i], int(counts[i])) for i in np.flatnonzero(~keep))
    return BlockExtrema(starts[keep], extrema[keep], counts[keep], dropped)


def calendar_covariates(instants, tz: str = "UTC"):
    """Ordinal calendar fields in zone ``tz``.

    Returns a ``[N, 4]`` float array of hour (0-23), day of week (0=Monday),
    day of month (1-31) and month (1-12).
    """
    zone = ZoneInfo(tz)
    out = []
    for t in np.asarray(instants, dtype="datetime64[s]"):
        local = dt.datetime.fromtimestamp(int(t.astype(np.int64)), tz=dt.timezone.utc).astimezone(zone)
        out.append((local.hour, local.weekday(), local.day, local.month))
    return np.array(out, dtype=float).reshape(-1, 4)


def local_days(instants, tz: str = "UTC") -> np.ndarray:
    """Calendar date in zone ``tz`` of each instant, as ``datetime64[D]``."""
    zone = ZoneInfo(tz)
    days = []
    for t in np.asarray(instants, dtype="datetime64[s]"):
        local = dt.datetime.fromtimestamp(int(t.astype(np.int64)), tz=dt.timezone.utc).astimezone(zone)
        days.append(np.datetime64(local.date()))
    return np.array(days, dtype="datetime64[D]")


def replicate_block_targets(instants: Sequence, block_starts, block_values, spec: BlockSpec = BlockSpec()):
    """Assign each sub-interval instant the extremum of its enclosing block.

    Instants whose block was dropped get NaN.
    """
    length = np.timedelta64(int(spec.block_length.total_seconds()), "s")
    origin = np.datetime64("1970-01-01T00:00:00") + np.timedelta64(
        int(spec.origin.total_seconds()), "s")
    t = np.asarray(instants, dtype="datetime64[s]")
    start = origin + ((t - origin) // length) * length
    lookup = dict(zip(np.asarray(block_starts, dtype="datetime64[s]").tolist(), block_values))
    return np.array([lookup.get(s, np.nan) for s in start.tolist()], dtype=float)
