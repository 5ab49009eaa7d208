"""Two-stage query ranking: template scoring, parameter scoring, inference,
training, and evaluation."""

from .bundle import ModelBundle, TrainConfig, load_bundle, save_bundle
from .catalog import CatalogEntry, TemplateCatalog, build_catalog
from .features import Featurizer, ScenarioInputs, fit_featurizer, prepare_inputs, scenarios_for_tool
from .predict import BundleScorer, PredictedQuery, RankedPrediction, inputs_from_store, predict_for_scenario
from .evaluate import evaluate, rank_of_ground_truth
from .train import train_bundle

__all__ = [
    "ModelBundle",
    "TrainConfig",
    "load_bundle",
    "save_bundle",
    "CatalogEntry",
    "TemplateCatalog",
    "build_catalog",
    "Featurizer",
    "ScenarioInputs",
    "fit_featurizer",
    "prepare_inputs",
    "scenarios_for_tool",
    "BundleScorer",
    "PredictedQuery",
    "RankedPrediction",
    "inputs_from_store",
    "predict_for_scenario",
    "evaluate",
    "rank_of_ground_truth",
    "train_bundle",
]
