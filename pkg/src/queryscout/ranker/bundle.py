"""The trained-model artifact: parameters, catalog, featurization state.

Bundles serialize to the named-tensor container (see neural.serialize);
the metadata block carries the catalog texts, layout, vocabulary,
hyperparameters, and training-time parameter sightings needed to evaluate
and predict from a cold start.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..dsl import Dialect, parse_query, template_from_ast
from ..errors import ModelError
from ..neural import TextEncoder, load_tensors, save_tensors
from ..telemetry import KINDS, LogLayout, NormStats
from .catalog import TemplateCatalog
from .features import Featurizer
from .model import HIDDEN

BUNDLE_VERSION = 1

MODEL_TYPES = ("factorized", "monolithic", "classifier")


@dataclass
class TrainConfig:
    seed: int = 0
    epochs: int = 50
    patience: int = 10
    lr: float = 1e-4
    weight_decay: float = 0.0
    input_noise: float = 0.0  # train-time gaussian jitter on the log vector
    average_from: int = 0  # 0 = off; else average template-model weights from that epoch
    m_negatives: int = 2
    beam: int = 5
    max_combos: int = 10
    min_token_freq: int = 2
    hidden: int = HIDDEN
    model_type: str = "factorized"
    exclude_report: bool = False
    rank_order: bool = True
    drop_metrics: tuple[str, ...] = ()
    single_tool: str | None = None
    val_subsample: int | None = None

    def to_json(self) -> dict:
        out = asdict(self)
        out["drop_metrics"] = list(self.drop_metrics)
        return out

    @staticmethod
    def from_json(obj: dict) -> "TrainConfig":
        obj = dict(obj)
        obj["drop_metrics"] = tuple(obj.get("drop_metrics", ()))
        return TrainConfig(**obj)


@dataclass
class ModelBundle:
    model_type: str
    config: TrainConfig
    catalog: TemplateCatalog
    featurizer: Featurizer
    vocab: dict[str, int]
    theta: dict[str, np.ndarray]
    phi: dict[str, np.ndarray] = field(default_factory=dict)
    seen_params: dict[str, list[tuple]] = field(default_factory=dict)
    query_space: list[tuple[int, tuple]] | None = None  # joint-model candidates
    trained: bool = False
    history: dict = field(default_factory=dict)

    def text_encoder(self) -> TextEncoder:
        return TextEncoder(vocab=self.vocab, dim=self.config.hidden)

    def require_trained(self) -> None:
        if not self.trained:
            raise ModelError("model bundle has not been trained")


def save_bundle(bundle: ModelBundle, path: str | Path) -> None:
    tensors: dict[str, np.ndarray] = {}
    for name, value in bundle.theta.items():
        tensors[f"theta.{name}"] = value
    for name, value in bundle.phi.items():
        tensors[f"phi.{name}"] = value
    tensors["stats.log.mean"] = bundle.featurizer.log_stats.mean
    tensors["stats.log.std"] = bundle.featurizer.log_stats.std
    for kind in KINDS:
        stats = bundle.featurizer.cand_stats[kind]
        tensors[f"stats.cand.{kind}.mean"] = stats.mean
        tensors[f"stats.cand.{kind}.std"] = stats.std

    meta = {
        "bundle_version": BUNDLE_VERSION,
        "model_type": bundle.model_type,
        "config": bundle.config.to_json(),
        "trained": bundle.trained,
        "history": bundle.history,
        "catalog": [[e.template.dialect.value, e.text] for e in bundle.catalog],
        "layout": {
            "segments": [list(seg) for seg in bundle.featurizer.layout.segments],
            "rank_order": bundle.featurizer.layout.rank_order,
        },
        "cand_width": bundle.featurizer.cand_width,
        "vocab": bundle.vocab,
        "seen_params": {text: [list(p) for p in params] for text, params in bundle.seen_params.items()},
        "query_space": (
            [[t, list(params)] for t, params in bundle.query_space] if bundle.query_space is not None else None
        ),
    }
    save_tensors(path, tensors, meta)


def load_bundle(path: str | Path) -> ModelBundle:
    tensors, meta = load_tensors(path)
    if meta.get("bundle_version") != BUNDLE_VERSION:
        raise ModelError(f"unsupported bundle version {meta.get('bundle_version')}")
    config = TrainConfig.from_json(meta["config"])

    templates = [template_from_ast(parse_query(text, Dialect(d))) for d, text in meta["catalog"]]
    catalog = TemplateCatalog(templates)
    if catalog.texts() != [text for _, text in meta["catalog"]]:
        raise ModelError("catalog round-trip mismatch in bundle")

    layout = LogLayout(
        segments=tuple(tuple(seg) for seg in meta["layout"]["segments"]),
        rank_order=bool(meta["layout"]["rank_order"]),
    )
    featurizer = Featurizer(
        layout=layout,
        log_stats=NormStats(mean=tensors.pop("stats.log.mean"), std=tensors.pop("stats.log.std")),
        cand_stats={
            kind: NormStats(
                mean=tensors.pop(f"stats.cand.{kind}.mean"), std=tensors.pop(f"stats.cand.{kind}.std")
            )
            for kind in KINDS
        },
        cand_width=int(meta["cand_width"]),
        drop_metrics=config.drop_metrics,
        rank_order=config.rank_order,
        exclude_report=config.exclude_report,
    )

    theta = {name[len("theta.") :]: value for name, value in tensors.items() if name.startswith("theta.")}
    phi = {name[len("phi.") :]: value for name, value in tensors.items() if name.startswith("phi.")}
    seen_params = {text: [tuple(p) for p in params] for text, params in meta["seen_params"].items()}
    query_space = (
        [(int(t), tuple(params)) for t, params in meta["query_space"]]
        if meta.get("query_space") is not None
        else None
    )
    return ModelBundle(
        model_type=meta["model_type"],
        config=config,
        catalog=catalog,
        featurizer=featurizer,
        vocab={k: int(v) for k, v in meta["vocab"].items()},
        theta=theta,
        phi=phi,
        seen_params=seen_params,
        query_space=query_space,
        trained=bool(meta["trained"]),
        history=meta.get("history", {}),
    )
