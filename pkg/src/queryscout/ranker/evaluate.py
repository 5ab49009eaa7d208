"""Rank and top-k evaluation over labeled scenarios.

The rank of a scenario is the 1-based position of its exact ground-truth
query in the bundle's full ranked enumeration (all templates, all
kind-valid parameter combinations; multi-blank templates enumerate the
full cross product). Scenarios whose ground truth the bundle cannot
express are counted separately instead of ranked; with rank ordering
disabled, ground truths whose parameters never occurred in training are
unexpressible by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..faultlab import SPLITS, Scenario
from .bundle import ModelBundle
from .features import prepare_inputs
from .predict import BundleScorer, _param_sort_key

TOP_K = (1, 2, 3, 4, 5)


@dataclass
class SplitMetrics:
    n: int = 0
    expressible: int = 0
    ranks: list[int] | None = None

    def __post_init__(self):
        if self.ranks is None:
            self.ranks = []

    @property
    def unexpressible(self) -> int:
        return self.n - self.expressible

    def to_json(self) -> dict:
        avg = float(np.mean(self.ranks)) if self.ranks else None
        top = {str(k): (float(np.mean([r <= k for r in self.ranks])) if self.ranks else None) for k in TOP_K}
        return {
            "n": self.n,
            "expressible": self.expressible,
            "unexpressible": self.unexpressible,
            "avg_rank": avg,
            "top": top,
        }


def rank_of_ground_truth(scorer: BundleScorer, si) -> int | None:
    """Exact-position rank, or None when the bundle cannot express it."""

    bundle = scorer.bundle
    if si.gt_template is None:
        return None
    if not bundle.config.rank_order:
        seen = bundle.seen_params.get(bundle.catalog.entries[si.gt_template].text, [])
        if tuple(si.gt_params) not in {tuple(p) for p in seen}:
            return None  # identifiers unseen in training cannot be produced
    entries = scorer.enumerate_queries(si)
    key = (si.gt_template, tuple(si.gt_params))
    for position, (_, t_idx, params) in enumerate(entries, start=1):
        if (t_idx, params) == key:
            return position
    return None


def evaluate(bundle: ModelBundle, scenarios: list[Scenario], splits: tuple[str, ...] | None = None) -> dict:
    """Metrics JSON per split: {split: {avg_rank, top, n, unexpressible}}."""

    bundle.require_trained()
    scorer = BundleScorer(bundle)
    wanted = splits or SPLITS
    metrics = {split: SplitMetrics() for split in wanted}
    for scenario in scenarios:
        if scenario.split not in metrics:
            continue
        si = prepare_inputs(scenario, bundle.featurizer, bundle.catalog)
        m = metrics[scenario.split]
        m.n += 1
        rank = rank_of_ground_truth(scorer, si)
        if rank is None:
            continue
        m.expressible += 1
        m.ranks.append(rank)
    return {split: m.to_json() for split, m in metrics.items() if m.n > 0}


def brute_force_ranking(scorer: BundleScorer, si) -> list[tuple[float, int, tuple]]:
    """Independent enumeration oracle: recompute every query probability
    directly from raw scores and sort. Used to cross-check the scorer."""

    import itertools

    from ..neural import log_softmax
    from .features import KIND_FOR_BLANK

    logp1 = log_softmax(scorer.template_scores(si))
    out: list[tuple[float, int, tuple]] = []
    for entry in scorer.bundle.catalog:
        blanks = entry.template.blank_kinds
        if not blanks:
            out.append((float(logp1[entry.index]), entry.index, ()))
            continue
        per_blank = scorer.p2_log_probs(si, entry.index)
        pools = [list(enumerate(si.cand_ids[KIND_FOR_BLANK[k]])) for k in blanks]
        for combo in itertools.product(*pools):
            logp = float(logp1[entry.index]) + sum(float(per_blank[b][i]) for b, (i, _) in enumerate(combo))
            out.append((logp, entry.index, tuple(c[1] for c in combo)))
    out.sort(key=lambda e: (-e[0], e[1], _param_sort_key(e[2])))
    return out
