"""Ablation flags -> training configuration.

Ablations are configuration, not code forks: every table row in the
evaluation comes from the same trainer with one flag flipped.
"""

from __future__ import annotations

from ..dsl import Dialect
from ..errors import ConfigError
from ..telemetry import ALL_METRICS
from .bundle import TrainConfig

ABLATIONS = (
    "exclude-report",
    "no-rank-order",
    "monolithic",
    "classifier",
    "single-tool=<dialect>",
    "drop-feature=<metric>",
)


def config_with_ablation(ablation: str | None = None, **kwargs) -> TrainConfig:
    """Build a TrainConfig, applying one ablation flag if given."""

    config = TrainConfig(**kwargs)
    if ablation is None:
        return config
    name, _, value = ablation.partition("=")
    if name == "exclude-report":
        config.exclude_report = True
    elif name == "no-rank-order":
        config.rank_order = False
    elif name == "monolithic":
        config.model_type = "monolithic"
        if config.val_subsample is None:
            config.val_subsample = 32
    elif name == "classifier":
        config.model_type = "classifier"
    elif name == "single-tool":
        if value not in {d.value for d in Dialect}:
            raise ConfigError(f"single-tool wants a dialect in {[d.value for d in Dialect]}, got {value!r}")
        config.single_tool = value
    elif name == "drop-feature":
        if value not in ALL_METRICS:
            raise ConfigError(f"drop-feature wants a metric in {list(ALL_METRICS)}, got {value!r}")
        config.drop_metrics = (value,)
    else:
        raise ConfigError(f"unknown ablation {ablation!r}; expected one of {ABLATIONS}")
    return config
