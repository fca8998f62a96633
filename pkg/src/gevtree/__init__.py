"""Nonstationary extreme-value estimation with bagged GEV decision trees."""

from .dataset import BlockSpec, Dataset, TimeSeries, extract_block_extrema
from .ensemble import EnsembleConfig, EnsembleModel, fit_ensemble, predict, predict_series
from .gev import GevParams
from .io import load_model, save_model
from .risk import RiskPolicy, annual_report, capacity_requirement, daily_eue, nerc_daily_lolp
from .tree import SplitRule, TreeConfig, TreeNode, fit_tree, predict_tree

__version__ = "0.1.0"

__all__ = [
    "BlockSpec", "Dataset", "TimeSeries", "extract_block_extrema",
    "EnsembleConfig", "EnsembleModel", "fit_ensemble", "predict", "predict_series",
    "GevParams", "load_model", "save_model",
    "RiskPolicy", "annual_report", "capacity_requirement", "daily_eue", "nerc_daily_lolp",
    "SplitRule", "TreeConfig", "TreeNode", "fit_tree", "predict_tree",
]
