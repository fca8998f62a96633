import json

import numpy as np
import pytest

from gevtree import io
from gevtree.dataset import Dataset
from gevtree.ensemble import EnsembleConfig, EnsembleModel, fit_ensemble, predict_arrays
from gevtree.errors import (
    CorruptModel,
    DimensionMismatch,
    ParseError,
    SchemaMismatch,
    VersionMismatch,
)
from gevtree.gev import GevParams
from gevtree.tree import TreeConfig, TreeNode

TRAIN = """block_start,hour,temp,peak
2024-01-01T00:00:00Z,0,-3.5,101.0
2024-01-01T00:00:00Z,1,-4.0,101.0
2024-01-02T00:00:00Z,0,1.25,99.5
"""


@pytest.fixture(scope="module")
def small_model(two_regime):
    return fit_ensemble(two_regime, EnsembleConfig(
        k_members=3, tree_config=TreeConfig(20, 1e-3, max_grow_iterations=6)))


class TestInstants:
    def test_offsets(self):
        assert io.parse_instant("2024-01-01T05:00:00+05:00") == np.datetime64("2024-01-01T00:00:00")
        assert io.parse_instant("2024-01-01T00:00:00Z") == np.datetime64("2024-01-01T00:00:00")
        assert io.parse_instant("2024-01-01 00:00") == np.datetime64("2024-01-01T00:00:00")

    def test_format(self):
        assert io.format_instant(np.datetime64("2024-01-01T00:00:00")) == "2024-01-01T00:00:00Z"


class TestLoadCsv:
    def test_training_file(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text(TRAIN)
        d = io.load_training(path)
        assert len(d) == 3
        assert d.column_names == ("hour", "temp")
        np.testing.assert_array_equal(d.targets, [101.0, 101.0, 99.5])
        assert d.instants[2] == np.datetime64("2024-01-02T00:00:00")

    def test_explicit_schema(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text(TRAIN)
        d = io.load_csv(path, {"temp": "covariate", "peak": "target"})
        assert d.n_features == 1 and d.instants is None

    def test_missing_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("block_start,hour\n2024-01-01T00:00:00Z,1\n")
        with pytest.raises(SchemaMismatch):
            io.load_training(path)

    def test_nan_cell_reports_line(self, tmp_path):
        path = tmp_path / "nan.csv"
        path.write_text(TRAIN.replace("1.25", "NaN"))
        with pytest.raises(ParseError, match="line 4"):
            io.load_training(path)

    def test_garbage_cell(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(TRAIN.replace("-4.0", "cold"))
        with pytest.raises(ParseError, match="line 3"):
            io.load_training(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            io.load_observations(tmp_path / "nope.csv")

    def test_observations(self, tmp_path):
        path = tmp_path / "obs.csv"
        path.write_text("timestamp,value\n2024-01-01T00:00:00Z,1.5\n2024-01-01T01:00:00Z,2\n")
        series = io.load_observations(path)
        np.testing.assert_array_equal(series.values, [1.5, 2.0])

    def test_write_load_fixpoint(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text(TRAIN)
        first = io.load_training(path)
        out = tmp_path / "again.csv"
        io.write_series(out, ["block_start", "hour", "temp", "peak"],
                        [[io.format_instant(t) for t in first.instants],
                         first.covariates[:, 0], first.covariates[:, 1], first.targets])
        second = io.load_training(out)
        np.testing.assert_array_equal(first.covariates, second.covariates)
        np.testing.assert_array_equal(first.targets, second.targets)
        np.testing.assert_array_equal(first.instants, second.instants)
        io.write_series(tmp_path / "third.csv", ["block_start", "hour", "temp", "peak"],
                        [[io.format_instant(t) for t in second.instants],
                         second.covariates[:, 0], second.covariates[:, 1], second.targets])
        assert (tmp_path / "third.csv").read_text() == out.read_text()

    def test_covariates_for_prediction(self, tmp_path):
        path = tmp_path / "cov.csv"
        path.write_text("instant,temp,hour,extra\n2024-01-01T00:00:00Z,3,4,x\n")
        x, instants = io.load_covariates(path, ("hour", "temp"))
        np.testing.assert_array_equal(x, [[4.0, 3.0]])
        assert instants.size == 1
        with pytest.raises(DimensionMismatch):
            io.load_covariates(path, ("hour", "wind"))


class TestModelPersistence:
    def test_round_trip(self, small_model, tmp_path):
        path = tmp_path / "model.json"
        io.save_model(small_model, path)
        loaded = io.load_model(path)
        probes = np.random.default_rng(0).uniform(-0.1, 1.1, size=(100, 1))
        np.testing.assert_array_equal(np.stack(predict_arrays(small_model, probes)),
                                      np.stack(predict_arrays(loaded, probes)))
        assert loaded.config == small_model.config
        assert loaded.covariate_schema == small_model.covariate_schema

    def test_save_is_stable(self, small_model, tmp_path):
        io.save_model(small_model, tmp_path / "a.json")
        io.save_model(io.load_model(tmp_path / "a.json"), tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_truncated(self, small_model, tmp_path):
        path = tmp_path / "model.json"
        io.save_model(small_model, path)
        text = path.read_text()
        path.write_text(text[: len(text) // 2])
        with pytest.raises(CorruptModel):
            io.load_model(path)

    def test_version_bump(self, small_model, tmp_path):
        doc = io.model_to_dict(small_model)
        doc["version"] += 1
        with pytest.raises(VersionMismatch):
            io.model_from_dict(doc)

    def test_missing_fields(self, small_model):
        doc = io.model_to_dict(small_model)
        del doc["members"][0]["params"]
        with pytest.raises(CorruptModel):
            io.model_from_dict(doc)

    def test_bad_split_dimension(self, small_model):
        doc = json.loads(json.dumps(io.model_to_dict(small_model)))
        node = doc["members"][0]
        node["rule"] = {"dim": 4, "threshold": 0.5}
        node["children"] = [{"rule": None, "params": node["params"], "children": None}] * 2
        with pytest.raises(CorruptModel):
            io.model_from_dict(doc)


class TestResiduals:
    def test_degenerate_fit(self):
        node = TreeNode(GevParams(10.0 - 1e-9 * np.euler_gamma, 1e-9, 0.0), 0.0, 3, n_features=1)
        model = EnsembleModel([node], EnsembleConfig(1), ("x",))
        res = io.residuals(model, Dataset(np.zeros((3, 1)), [10.0, 10.0, 10.0]))
        np.testing.assert_allclose(res, 0.0, atol=1e-12)

    def test_heavy_tail_is_infinite(self):
        node = TreeNode(GevParams(0.0, 1.0, 1.2), 0.0, 3, n_features=1)
        model = EnsembleModel([node], EnsembleConfig(1), ("x",))
        assert np.all(np.isinf(io.residuals(model, Dataset(np.zeros((2, 1)), [1.0, 2.0]))))
