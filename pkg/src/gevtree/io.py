"""CSV ingestion, model persistence and residuals.

File grammars
-------------
Observations CSV
    ``timestamp,value`` with one row per sub-interval observation.
Training CSV
    ``block_start,<covariate columns...>,peak`` with one row per
    (sub-interval covariate, enclosing-block peak) pair.
Covariates CSV (prediction input)
    Every column of the model's covariate schema, plus an optional
    ``instant`` (or ``timestamp`` / ``block_start``) column. Other columns
    are ignored.
Model JSON
    ``{version: 1, config: {...}, schema: [...], members: [node...]}`` where a
    node is ``{rule: {dim, threshold} | null, params: {mu, sigma, xi},
    children: [left, right] | null}`` plus informational ``size`` and
    ``log_score_total``.

Timestamps are ISO-8601; values without an offset are taken as UTC.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
import os

import numpy as np

from . import gev
from .dataset import Dataset, TimeSeries
from .ensemble import EnsembleConfig, EnsembleModel, predict_arrays
from .errors import CorruptModel, DimensionMismatch, ParseError, SchemaMismatch, VersionMismatch
from .gev import GevParams
from .tree import SplitRule, TreeConfig, TreeNode

MODEL_FORMAT_VERSION = 1

TIME_COLUMNS = ("instant", "timestamp", "block_start")
OBSERVATIONS_SCHEMA = {"timestamp": "time", "value": "value"}
ROLES = ("time", "value", "covariate", "target")


def parse_instant(text):
    """ISO-8601 string to ``datetime64[s]`` in UTC."""
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    stamp = dt.datetime.fromisoformat(text)
    if stamp.tzinfo is not None:
        stamp = stamp.astimezone(dt.timezone.utc).replace(tzinfo=None)
    return np.datetime64(stamp, "s")


def format_instant(t):
    return str(np.datetime64(t, "s")) + "Z"


def _parse_float(text, line, column):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"column {column!r}: cannot parse {text!r} as a number", line) from None
    if not math.isfinite(v):
        raise ParseError(f"column {column!r}: non-finite value {text!r}", line)
    return v


def _read_rows(path, required):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaMismatch(f"{path}: file is empty") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaMismatch(f"{path}: missing column(s) {', '.join(missing)}")
        pos = {c: header.index(c) for c in required}
        rows = []
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", reader.line_num)
            rows.append((reader.line_num, {c: row[i] for c, i in pos.items()}))
    return header, rows


def load_csv(path, schema):
    """Load a CSV whose columns are assigned roles by ``schema``.

    ``schema`` maps column names to ``time``, ``value``, ``covariate`` or
    ``target``. A time/value schema yields a :class:`TimeSeries`; covariate
    and target columns (with optional time) yield a :class:`Dataset`.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    bad = {c: r for c, r in schema.items() if r not in ROLES}
    if bad:
        raise ValueError(f"unknown roles in schema: {bad}")
    by_role = {role: [c for c, r in schema.items() if r == role] for role in ROLES}
    _, rows = _read_rows(path, list(schema))

    times = None
    if by_role["time"]:
        (tcol,) = by_role["time"]
        times = []
        for line, rec in rows:
            try:
                times.append(parse_instant(rec[tcol]))
            except ValueError:
                raise ParseError(f"column {tcol!r}: bad timestamp {rec[tcol]!r}", line) from None
        times = np.array(times, dtype="datetime64[s]")

    if by_role["value"]:
        if times is None:
            raise SchemaMismatch("a value column needs a time column")
        (vcol,) = by_role["value"]
        values = [_parse_float(rec[vcol], line, vcol) for line, rec in rows]
        return TimeSeries(times, np.array(values))

    if len(by_role["target"]) != 1:
        raise SchemaMismatch("schema needs exactly one target column")
    (ycol,) = by_role["target"]
    covs = by_role["covariate"]
    x = np.array([[_parse_float(rec[c], line, c) for c in covs] for line, rec in rows],
                 dtype=float).reshape(len(rows), len(covs))
    y = np.array([_parse_float(rec[ycol], line, ycol) for line, rec in rows], dtype=float)
    return Dataset(x, y, tuple(covs), times)


def load_observations(path) -> TimeSeries:
    return load_csv(path, OBSERVATIONS_SCHEMA)


def load_training(path, covariates=None, target="peak", time_column="block_start") -> Dataset:
    """Load a training CSV; by default every column other than the time and
    target columns is a covariate."""
    if covariates is None:
        with open(path, newline="") as fh:
            header = [h.strip() for h in next(csv.reader(fh), [])]
        for col in (time_column, target):
            if col not in header:
                raise SchemaMismatch(f"{path}: missing column {col}")
        covariates = [h for h in header if h not in (time_column, target)]
        if not covariates:
            raise SchemaMismatch(f"{path}: no covariate columns")
    schema = {time_column: "time", **{c: "covariate" for c in covariates}, target: "target"}
    return load_csv(path, schema)


def load_covariates(path, columns):
    """Covariate matrix for ``columns`` plus instants (or None)."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, newline="") as fh:
        header = [h.strip() for h in next(csv.reader(fh), [])]
    missing = [c for c in columns if c not in header]
    if missing:
        raise DimensionMismatch(f"{path}: missing covariate column(s) {', '.join(missing)}")
    tcol = next((c for c in TIME_COLUMNS if c in header), None)
    _, rows = _read_rows(path, list(columns) + ([tcol] if tcol else []))
    x = np.array([[_parse_float(rec[c], line, c) for c in columns] for line, rec in rows],
                 dtype=float).reshape(len(rows), len(columns))
    instants = None
    if tcol:
        try:
            instants = np.array([parse_instant(rec[tcol]) for _, rec in rows], dtype="datetime64[s]")
        except ValueError as exc:
            raise ParseError(f"column {tcol!r}: {exc}") from None
    return x, instants


def write_series(path, header, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([v if isinstance(v, str) else repr(float(v)) for v in row])


# -- model persistence -----------------------------------------------------

def _node_to_dict(node: TreeNode):
    return {
        "rule": None if node.is_leaf else {"dim": node.rule.dim, "threshold": node.rule.threshold},
        "params": {"mu": float(node.params.mu), "sigma": float(node.params.sigma),
                   "xi": float(node.params.xi)},
        "children": None if node.is_leaf else [_node_to_dict(node.left), _node_to_dict(node.right)],
        "size": int(node.size),
        "log_score_total": float(node.log_score_total),
    }


def _node_from_dict(doc, n_features):
    params = GevParams(float(doc["params"]["mu"]), float(doc["params"]["sigma"]),
                       float(doc["params"]["xi"]))
    node = TreeNode(params=params, log_score_total=float(doc.get("log_score_total", math.nan)),
                    size=int(doc.get("size", 0)), n_features=n_features)
    rule, children = doc["rule"], doc["children"]
    if (rule is None) != (children is None):
        raise CorruptModel("a node must have both a rule and children, or neither")
    if rule is not None:
        dim = int(rule["dim"])
        if not 0 <= dim < n_features:
            raise CorruptModel(f"split dimension {dim} out of range")
        if len(children) != 2:
            raise CorruptModel("a split node needs exactly two children")
        node.rule = SplitRule(dim, float(rule["threshold"]))
        node.left = _node_from_dict(children[0], n_features)
        node.right = _node_from_dict(children[1], n_features)
    return node


def model_to_dict(model: EnsembleModel):
    cfg = model.config
    return {
        "version": MODEL_FORMAT_VERSION,
        "config": {
            "k_members": cfg.k_members,
            "resample_ratio": cfg.resample_ratio,
            "seed": cfg.seed,
            "tree_config": {
                "min_partition_size": cfg.tree_config.min_partition_size,
                "t_crit": cfg.tree_config.t_crit,
                "max_grow_iterations": cfg.tree_config.max_grow_iterations,
            },
        },
        "schema": list(model.covariate_schema),
        "members": [_node_to_dict(m) for m in model.members],
    }


def model_from_dict(doc) -> EnsembleModel:
    if not isinstance(doc, dict) or "version" not in doc:
        raise CorruptModel("model document has no version field")
    if doc["version"] != MODEL_FORMAT_VERSION:
        raise VersionMismatch(f"model format version {doc['version']!r}, "
                              f"expected {MODEL_FORMAT_VERSION}")
    try:
        c = doc["config"]
        config = EnsembleConfig(
            k_members=int(c["k_members"]), resample_ratio=float(c["resample_ratio"]),
            seed=int(c["seed"]), tree_config=TreeConfig(**c["tree_config"]))
        schema = tuple(str(s) for s in doc["schema"])
        members = [_node_from_dict(m, len(schema)) for m in doc["members"]]
        return EnsembleModel(members, config, schema)
    except CorruptModel:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"malformed model document: {exc!r}") from exc


def save_model(model: EnsembleModel, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_model(path) -> EnsembleModel:
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(doc)


def residuals(model: EnsembleModel, data: Dataset):
    """Predicted expectation minus observed target, per row.

    Rows whose predicted shape is ``>= 1`` have no finite expectation and get
    ``inf``.
    """
    if data.n_features != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} covariates, "
                                f"data has {data.n_features}")
    params = GevParams(*predict_arrays(model, data.covariates))
    return np.atleast_1d(gev.mean(params)) - data.targets
