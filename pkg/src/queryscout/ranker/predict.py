"""Inference over a frozen bundle: ranked top-k query prediction.

The scorer precomputes template encodings and their weight projections
once per bundle (weights are frozen at inference), then scores scenarios
with a few small matrix products each. Final ranking follows the factored
probability: P(query) = P(template | report, logs) * prod_i P(param_i |
blank_i, template, logs), combined in log space and sorted with stable
ties (catalog order, then ascending parameter ids).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..dsl import ParamAssignment, QueryAst, fill_blanks, render_query
from ..errors import ModelError
from ..faultlab import Scenario
from ..neural import dense_forward, encode_text, log_softmax, relu
from ..telemetry import TelemetryStore, featurize
from .bundle import ModelBundle
from .features import KIND_FOR_BLANK, ScenarioInputs, prepare_inputs, report_tokens_text
from .train import _chunked_encode, _space_graphs


@dataclass
class PredictedQuery:
    text: str
    probability: float
    dialect: str
    template_text: str
    params: tuple
    rank: int


@dataclass
class RankedPrediction:
    queries: list[PredictedQuery]
    k: int


class BundleScorer:
    """Shared evaluation/prediction engine over a frozen bundle."""

    def __init__(self, bundle: ModelBundle):
        bundle.require_trained()
        self.bundle = bundle
        self.encoder = bundle.text_encoder()
        self.h = bundle.config.hidden
        theta = bundle.theta
        if bundle.model_type == "monolithic":
            if bundle.query_space is None:
                raise ModelError("joint model bundle lacks its query space")
            graphs = _space_graphs(bundle.catalog, bundle.query_space)
            self.space = bundle.query_space
            self.v_t, _ = _chunked_encode(theta, graphs)
            self.blank_vecs = None
        elif bundle.model_type == "classifier":
            graphs = [e.graph for e in bundle.catalog]
            _, self.blank_vecs = _chunked_encode(theta, graphs)
            self.space = None
            self.v_t = None
        else:
            graphs = [e.graph for e in bundle.catalog]
            self.v_t, self.blank_vecs = _chunked_encode(theta, graphs)
            self.space = None

        if self.v_t is not None:
            # projections of the frozen template vectors through the fusion
            # and head weights, reused across scenarios
            h = self.h
            self._fuse_t = self.v_t @ theta["fuse1.w"][:, 2 * h :].T
            self._head_t = self.v_t @ theta["head1.w"][:, h:].T
        if self.blank_vecs is not None and bundle.phi:
            phi = bundle.phi
            self._p2_b = [
                {blank: phi["p2l1.w"][:, : self.h] @ vec + phi["p2l1.b"] for blank, vec in per_entry.items()}
                for per_entry in self.blank_vecs
            ]

    # scoring ----------------------------------------------------------------

    def _report_log_vecs(self, si: ScenarioInputs):
        theta = self.bundle.theta
        v_r, _ = encode_text(self.encoder, theta["emb"], si.token_text)
        v_l = dense_forward(theta["log.w"], theta["log.b"], si.log_vec)
        return v_r, v_l

    def template_scores(self, si: ScenarioInputs) -> np.ndarray:
        """Raw scores per catalog entry (or per space entry for the joint model)."""

        theta = self.bundle.theta
        if self.bundle.model_type == "classifier":
            from .model import classifier_forward

            logits, _ = classifier_forward(theta, self.encoder, si.token_text, si.log_vec)
            return logits
        h = self.h
        v_r, v_l = self._report_log_vecs(si)
        a1 = (
            self._fuse_t
            + v_r @ theta["fuse1.w"][:, :h].T
            + v_l @ theta["fuse1.w"][:, h : 2 * h].T
            + theta["fuse1.b"]
        )
        v_s = relu(a1) @ theta["fuse2.w"].T + theta["fuse2.b"]
        a2 = v_s @ theta["head1.w"][:, : h].T + self._head_t + theta["head1.b"]
        return (relu(a2) @ theta["head2.w"].T + theta["head2.b"]).ravel()

    def p1_log_probs(self, si: ScenarioInputs) -> np.ndarray:
        return log_softmax(self.template_scores(si))

    def kind_projections(self, si: ScenarioInputs) -> dict[str, np.ndarray]:
        phi = self.bundle.phi
        return {
            kind: x @ phi["p2l1.w"][:, self.h :].T for kind, x in si.cand_x.items()
        }

    def p2_log_probs(self, si: ScenarioInputs, t_idx: int, kind_proj: dict[str, np.ndarray] | None = None):
        """Per-blank log distributions over candidates for one template."""

        entry = self.bundle.catalog.entries[t_idx]
        if not entry.template.blank_kinds:
            return []
        phi = self.bundle.phi
        if kind_proj is None:
            kind_proj = self.kind_projections(si)
        out = []
        for blank_no, kind_name in enumerate(entry.template.blank_kinds):
            kind = KIND_FOR_BLANK[kind_name]
            a1 = self._p2_b[t_idx][blank_no + 1] + kind_proj[kind]
            scores = (relu(a1) @ phi["p2l2.w"].T + phi["p2l2.b"]).ravel()
            out.append(log_softmax(scores))
        return out

    # enumeration --------------------------------------------------------------

    def enumerate_queries(
        self, si: ScenarioInputs, beam: int | None = None, max_combos: int | None = None
    ) -> list[tuple[float, int, tuple]]:
        """(log prob, template index, params) for candidate queries, sorted
        by probability desc with stable ties.

        ``beam`` limits to the top templates by P1; ``max_combos`` caps
        parameter combinations per template. Defaults enumerate everything.
        """

        if self.bundle.model_type == "monolithic":
            return self._enumerate_joint(si)
        logp1 = self.p1_log_probs(si)
        order = np.lexsort((np.arange(len(logp1)), -logp1))
        chosen = order[:beam] if beam is not None else order
        kind_proj = self.kind_projections(si) if self.bundle.phi else None
        entries: list[tuple[float, int, tuple]] = []
        for t_idx in chosen:
            t_idx = int(t_idx)
            entry = self.bundle.catalog.entries[t_idx]
            blanks = entry.template.blank_kinds
            if not blanks:
                entries.append((float(logp1[t_idx]), t_idx, ()))
                continue
            per_blank = self.p2_log_probs(si, t_idx, kind_proj)
            ids = [si.cand_ids[KIND_FOR_BLANK[k]] for k in blanks]
            combos = self._combos(per_blank, ids, max_combos)
            for logp2, params in combos:
                entries.append((float(logp1[t_idx]) + logp2, t_idx, params))
        entries.sort(key=lambda e: (-e[0], e[1], _param_sort_key(e[2])))
        return entries

    @staticmethod
    def _combos(per_blank, ids, max_combos):
        if len(per_blank) == 1:
            pairs = [(float(lp), (ids[0][i],)) for i, lp in enumerate(per_blank[0])]
            pairs.sort(key=lambda p: (-p[0], _param_sort_key(p[1])))
            return pairs[:max_combos] if max_combos is not None else pairs
        # multi-blank: sum of per-blank log probabilities (independent blanks)
        pools = []
        for blank_no, lp in enumerate(per_blank):
            ranked = sorted(range(len(lp)), key=lambda i: (-lp[i], i))
            if max_combos is not None:
                ranked = ranked[:max_combos]
            pools.append([(float(lp[i]), ids[blank_no][i]) for i in ranked])
        out = []
        for combo in itertools.product(*pools):
            logp2 = sum(c[0] for c in combo)
            out.append((logp2, tuple(c[1] for c in combo)))
        out.sort(key=lambda p: (-p[0], _param_sort_key(p[1])))
        return out[:max_combos] if max_combos is not None else out

    def _enumerate_joint(self, si: ScenarioInputs) -> list[tuple[float, int, tuple]]:
        logp = log_softmax(self.template_scores(si))
        entries = [
            (float(logp[i]), t_idx, params) for i, (t_idx, params) in enumerate(self.space)
        ]
        entries.sort(key=lambda e: (-e[0], e[1], _param_sort_key(e[2])))
        return entries

    # prediction ----------------------------------------------------------------

    def predict(self, si: ScenarioInputs, k: int = 5, beam: int | None = None, max_combos: int | None = None) -> RankedPrediction:
        beam = beam if beam is not None else self.bundle.config.beam
        max_combos = max_combos if max_combos is not None else self.bundle.config.max_combos
        if self.bundle.model_type == "monolithic":
            entries = self._enumerate_joint(si)
        else:
            entries = self.enumerate_queries(si, beam=beam, max_combos=max_combos)
        queries = []
        for rank, (logp, t_idx, params) in enumerate(entries[:k], start=1):
            entry = self.bundle.catalog.entries[t_idx]
            ast = fill_blanks(entry.template, ParamAssignment(values=params))
            queries.append(
                PredictedQuery(
                    text=render_query(ast),
                    probability=float(np.exp(logp)),
                    dialect=entry.dialect.value,
                    template_text=entry.text,
                    params=params,
                    rank=rank,
                )
            )
        return RankedPrediction(queries=queries, k=k)


def _param_sort_key(params: tuple) -> tuple:
    return tuple((0, p) if isinstance(p, (int, float)) else (1, p) for p in params)


def inputs_from_store(
    bundle: ModelBundle, store: TelemetryStore, report_text: str, flags: tuple[str, ...] = ()
) -> ScenarioInputs:
    """Build model inputs for an ad-hoc (report, logs) pair."""

    featurizer = bundle.featurizer
    feats = featurize(store, featurizer.drop_metrics)
    from ..telemetry import build_log_vector, normalize

    raw = build_log_vector(feats, featurizer.layout)
    log_vec = normalize(raw, featurizer.log_stats).values
    cand_ids, cand_x = {}, {}
    for kind in ("switch", "function", "container"):
        ids, x = featurizer.candidates(store, kind, feats)
        cand_ids[kind] = ids
        cand_x[kind] = x
    text = "" if featurizer.exclude_report else report_tokens_text(report_text, flags)
    return ScenarioInputs(
        scenario_id="adhoc",
        split="",
        log_vec=log_vec,
        token_text=text,
        cand_ids=cand_ids,
        cand_x=cand_x,
        gt_text="",
    )


def predict_for_scenario(bundle: ModelBundle, scenario: Scenario, k: int = 5, beam: int | None = None) -> RankedPrediction:
    scorer = BundleScorer(bundle)
    si = prepare_inputs(scenario, bundle.featurizer, bundle.catalog)
    return scorer.predict(si, k=k, beam=beam)


def predict_from_query_ast(ast: QueryAst) -> str:
    return render_query(ast)
