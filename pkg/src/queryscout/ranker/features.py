"""Scenario featurization for the ranking models.

Fits layout and normalization statistics on the training split, then turns
any scenario into model inputs: the normalized rank-ordered log vector,
report token ids (report text plus choice-flag tokens), and per-kind
candidate matrices [features ; ranks] padded to one width across kinds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dsl import Dialect
from ..errors import ConfigError, ModelError
from ..faultlab import Scenario
from ..telemetry import (
    KINDS,
    LogLayout,
    NormStats,
    SubsystemFeatures,
    TelemetryStore,
    build_log_vector,
    feature_names,
    featurize,
    normalize,
)
from .catalog import TemplateCatalog

KIND_FOR_BLANK = {"switch_id": "switch", "function_name": "function", "host_id": "container"}


def report_tokens_text(text: str, flags: tuple[str, ...]) -> str:
    """Fold the structured choices into the token stream as marker words."""

    markers = " ".join("flag" + flag.replace("_", "") for flag in flags)
    return f"{text} {markers}".strip()


@dataclass
class Featurizer:
    layout: LogLayout
    log_stats: NormStats
    cand_stats: dict[str, NormStats]
    cand_width: int
    drop_metrics: tuple[str, ...] = ()
    rank_order: bool = True
    exclude_report: bool = False

    def log_vector(self, store: TelemetryStore) -> np.ndarray:
        feats = featurize(store, self.drop_metrics)
        raw = build_log_vector(feats, self.layout)
        return normalize(raw, self.log_stats).values

    def candidates(self, store: TelemetryStore, kind: str, feats: list[SubsystemFeatures] | None = None):
        """(ids, X) for one subsystem kind; X rows are [features ; ranks]."""

        if feats is None:
            feats = featurize(store, self.drop_metrics)
        per_kind = sorted((f for f in feats if f.kind == kind), key=lambda f: f.subsystem_id)
        if not per_kind:
            raise ModelError(f"no {kind} subsystems in store")
        ids = [f.subsystem_id for f in per_kind]
        stats = self.cand_stats[kind]
        width = per_kind[0].features.shape[0]
        x = np.zeros((len(per_kind), 2 * self.cand_width), dtype=np.float64)
        for i, f in enumerate(per_kind):
            safe_std = np.where(stats.std > 1e-12, stats.std, 1.0)
            z = (f.features - stats.mean) / safe_std
            z = np.where(stats.std > 1e-12, z, 0.0)
            x[i, :width] = z
            if self.rank_order:
                x[i, self.cand_width : self.cand_width + width] = f.ranks
        return ids, x

    def report_text(self, scenario: Scenario) -> str:
        if self.exclude_report:
            return ""
        return report_tokens_text(scenario.report.text, scenario.report.flags())


def fit_featurizer(
    train_scenarios: list[Scenario],
    drop_metrics: tuple[str, ...] = (),
    rank_order: bool = True,
    exclude_report: bool = False,
) -> Featurizer:
    """Layout and statistics come from the training split only."""

    if not train_scenarios:
        raise ConfigError("cannot fit a featurizer without training scenarios")
    slots = {kind: 0 for kind in KINDS}
    all_feats = []
    for scenario in train_scenarios:
        feats = featurize(scenario.store, drop_metrics)
        all_feats.append(feats)
        for kind in KINDS:
            slots[kind] = max(slots[kind], sum(1 for f in feats if f.kind == kind))
    layout = LogLayout.build(slots, drop_metrics, rank_order)

    raw_rows = []
    for feats in all_feats:
        raw_rows.append(build_log_vector(feats, layout).values)
    log_stats = NormStats.fit(np.vstack(raw_rows))

    cand_stats: dict[str, NormStats] = {}
    cand_width = 0
    for kind in KINDS:
        rows = np.vstack([f.features for feats in all_feats for f in feats if f.kind == kind])
        cand_stats[kind] = NormStats.fit(rows)
        cand_width = max(cand_width, len(feature_names(kind, drop_metrics)))

    return Featurizer(
        layout=layout,
        log_stats=log_stats,
        cand_stats=cand_stats,
        cand_width=cand_width,
        drop_metrics=drop_metrics,
        rank_order=rank_order,
        exclude_report=exclude_report,
    )


@dataclass
class ScenarioInputs:
    """Everything the models need for one scenario, precomputed."""

    scenario_id: str
    split: str
    log_vec: np.ndarray
    token_text: str
    cand_ids: dict[str, list]
    cand_x: dict[str, np.ndarray]
    gt_text: str
    gt_template: int | None = None
    gt_params: tuple = ()
    gt_cand_idx: list[int] = field(default_factory=list)
    fault_category: str = ""


def prepare_inputs(
    scenario: Scenario, featurizer: Featurizer, catalog: TemplateCatalog
) -> ScenarioInputs:
    feats = featurize(scenario.store, featurizer.drop_metrics)
    raw = build_log_vector(feats, featurizer.layout)
    log_vec = normalize(raw, featurizer.log_stats).values

    cand_ids: dict[str, list] = {}
    cand_x: dict[str, np.ndarray] = {}
    for kind in KINDS:
        ids, x = featurizer.candidates(scenario.store, kind, feats)
        cand_ids[kind] = ids
        cand_x[kind] = x

    entry = catalog.lookup(scenario.ground_truth_ast)
    gt_template = entry.index if entry is not None else None
    gt_params: tuple = ()
    gt_cand_idx: list[int] = []
    if entry is not None:
        from ..dsl import extract_template

        _, params = extract_template(scenario.ground_truth_ast)
        gt_params = params.values
        for blank_no, kind_name in enumerate(entry.template.blank_kinds):
            kind = KIND_FOR_BLANK[kind_name]
            value = gt_params[blank_no]
            try:
                gt_cand_idx.append(cand_ids[kind].index(value))
            except ValueError:
                raise ModelError(
                    f"ground-truth parameter {value!r} is not a {kind} subsystem of scenario {scenario.id}"
                ) from None

    return ScenarioInputs(
        scenario_id=scenario.id,
        split=scenario.split,
        log_vec=log_vec,
        token_text=featurizer.report_text(scenario),
        cand_ids=cand_ids,
        cand_x=cand_x,
        gt_text=scenario.ground_truth,
        gt_template=gt_template,
        gt_params=gt_params,
        gt_cand_idx=gt_cand_idx,
        fault_category=scenario.fault.category,
    )


def scenarios_for_tool(scenarios: list[Scenario], tool: str | None) -> list[Scenario]:
    """Single-tool pruning: keep faults whose ground truth uses the dialect."""

    if tool is None:
        return list(scenarios)
    try:
        dialect = Dialect(tool)
    except ValueError:
        raise ConfigError(f"unknown dialect {tool!r}; expected one of {[d.value for d in Dialect]}") from None
    return [s for s in scenarios if s.ground_truth_ast.dialect is dialect]
