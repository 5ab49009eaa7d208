"""Training loops: contrastive template learning, per-blank parameter
learning, and the two structural baselines.

Batch size is one scenario; ordering, negative draws, and initialization
all come from seeded generators, so training is bit-reproducible. Early
stopping tracks a validation rank metric with configurable patience and
restores the best snapshot.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..dsl import ast_to_graph, fill_blanks, ParamAssignment, extract_template, render_template
from ..dsl.graph import FEATURE_WIDTH
from ..errors import ConfigError, ModelError
from ..faultlab import Dataset, Scenario
from ..neural import AdamState, adam_step, build_vocabulary, cross_entropy, OOV
from .bundle import ModelBundle, TrainConfig
from .catalog import TemplateCatalog, build_catalog
from .features import (
    Featurizer,
    KIND_FOR_BLANK,
    ScenarioInputs,
    fit_featurizer,
    prepare_inputs,
    report_tokens_text,
    scenarios_for_tool,
)
from .model import (
    ModelDims,
    classifier_backward,
    classifier_forward,
    encode_templates,
    init_classifier_theta,
    init_phi,
    init_theta,
    p1_backward,
    p1_forward,
    p1_scores_from_vt,
    p2_backward,
    p2_forward,
)

MONO_ID_BUCKETS = 8
MONO_COMBO_CAP = 50


def _snapshot(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: v.copy() for k, v in params.items()}


def _decay_weights(params: dict[str, np.ndarray], lr: float, weight_decay: float) -> None:
    """Decoupled weight decay on matrices; biases and embeddings exempt."""

    if weight_decay <= 0.0:
        return
    factor = 1.0 - lr * weight_decay
    for name, value in params.items():
        if value.ndim == 2 and name != "emb":
            value *= factor


def _rank_of(scores: np.ndarray, target: int) -> int:
    """1-based rank under (score desc, index asc) ordering."""

    s = scores[target]
    better = np.sum(scores > s)
    tied_before = np.sum(scores[:target] == s)
    return int(better + tied_before) + 1


class _EarlyStop:
    def __init__(self, patience: int):
        self.patience = patience
        self.best = np.inf
        self.best_params: dict[str, np.ndarray] | None = None
        self.stale = 0

    def update(self, metric: float, params: dict[str, np.ndarray]) -> bool:
        """Returns True when training should stop."""

        if metric < self.best - 1e-12:
            self.best = metric
            self.best_params = _snapshot(params)
            self.stale = 0
        else:
            self.stale += 1
        return self.stale > self.patience

    def restore(self, params: dict[str, np.ndarray]) -> None:
        if self.best_params is not None:
            for k in params:
                params[k] = self.best_params[k].copy()


def _chunked_encode(theta, graphs, chunk: int = 48):
    """encode_templates in graph chunks to keep block matrices small."""

    vts = []
    vbs = []
    for start in range(0, len(graphs), chunk):
        vt, vb = encode_templates(theta, graphs[start : start + chunk])
        vts.append(vt)
        vbs.extend(vb)
    return np.vstack(vts), vbs


# ---------------------------------------------------------------------------


def train_bundle(dataset: Dataset, config: TrainConfig, log=None) -> ModelBundle:
    """Train a bundle of the configured model type on the dataset's train
    split, early-stopping on the validation split."""

    log = log or (lambda msg: None)
    scenarios = scenarios_for_tool(dataset.scenarios, config.single_tool)
    train = [s for s in scenarios if s.split == "train"]
    val = [s for s in scenarios if s.split == "val"]
    if not train or not val:
        raise ConfigError("dataset needs non-empty train and val splits")

    featurizer = fit_featurizer(
        train,
        drop_metrics=config.drop_metrics,
        rank_order=config.rank_order,
        exclude_report=config.exclude_report,
    )
    from ..dsl import Dialect

    catalog = build_catalog(train, dialect=Dialect(config.single_tool) if config.single_tool else None)

    if config.exclude_report:
        vocab = {OOV: 0}
    else:
        vocab = build_vocabulary(
            [report_tokens_text(s.report.text, s.report.flags()) for s in train],
            min_freq=config.min_token_freq,
        )

    train_inputs = [prepare_inputs(s, featurizer, catalog) for s in train]
    val_inputs = [prepare_inputs(s, featurizer, catalog) for s in val]
    for si in train_inputs:
        if si.gt_template is None:
            raise ModelError(f"training ground truth missing from catalog for scenario {si.scenario_id}")

    node_width = FEATURE_WIDTH + (MONO_ID_BUCKETS if config.model_type == "monolithic" else 0)
    dims = ModelDims(
        node_feat_width=node_width,
        log_dim=featurizer.layout.width,
        cand_width=featurizer.cand_width,
        vocab_size=len(vocab),
        catalog_size=len(catalog),
        hidden=config.hidden,
    )

    bundle = ModelBundle(
        model_type=config.model_type,
        config=config,
        catalog=catalog,
        featurizer=featurizer,
        vocab=vocab,
        theta={},
        phi={},
    )
    bundle.seen_params = _collect_seen_params(train)

    if config.model_type == "factorized":
        _train_p1(bundle, dims, train_inputs, val_inputs, config, log)
        _train_p2(bundle, dims, train_inputs, val_inputs, config, log)
    elif config.model_type == "classifier":
        _train_classifier(bundle, dims, train_inputs, val_inputs, config, log)
        _train_p2(bundle, dims, train_inputs, val_inputs, config, log)
    elif config.model_type == "monolithic":
        _train_monolithic(bundle, dims, train_inputs, val_inputs, config, log)
    else:
        raise ConfigError(f"unknown model type {config.model_type!r}")

    bundle.trained = True
    return bundle


def _collect_seen_params(train: list[Scenario]) -> dict[str, list[tuple]]:
    seen: dict[str, set[tuple]] = {}
    for scenario in train:
        template, params = extract_template(scenario.ground_truth_ast)
        seen.setdefault(render_template(template), set()).add(params.values)
    return {text: sorted(values, key=str) for text, values in seen.items()}


# P1 -------------------------------------------------------------------------


def train_p1(bundle: ModelBundle, train_inputs, val_inputs, config: TrainConfig, log=None):
    """Contrastive training of the template scorer (exposed for tests)."""

    dims = ModelDims(
        node_feat_width=FEATURE_WIDTH,
        log_dim=bundle.featurizer.layout.width,
        cand_width=bundle.featurizer.cand_width,
        vocab_size=len(bundle.vocab),
        catalog_size=len(bundle.catalog),
        hidden=config.hidden,
    )
    return _train_p1(bundle, dims, train_inputs, val_inputs, config, log or (lambda m: None))


def _train_p1(bundle, dims, train_inputs, val_inputs, config, log):
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    theta = init_theta(rng, dims)
    encoder = bundle.text_encoder()
    graphs = [e.graph for e in bundle.catalog]
    n_templates = len(graphs)
    if n_templates < config.m_negatives + 1:
        raise ConfigError("catalog too small for the negative sample count")
    adam = AdamState(lr=config.lr)
    stopper = _EarlyStop(config.patience)
    losses = []
    val_curve = []
    fills = _fill_counts(bundle.catalog, val_inputs[0]) if val_inputs else None
    averaged: dict[str, np.ndarray] | None = None
    n_avg = 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(train_inputs))
        epoch_loss = 0.0
        for idx in order:
            si = train_inputs[idx]
            negatives = _draw_negatives(rng, n_templates, si.gt_template, config.m_negatives)
            chosen = [si.gt_template] + negatives
            log_vec = si.log_vec
            if config.input_noise > 0.0:
                log_vec = log_vec + rng.normal(0.0, config.input_noise, size=log_vec.shape)
            scores, cache = p1_forward(theta, encoder, si.token_text, log_vec, [graphs[i] for i in chosen])
            loss, dscores = cross_entropy(scores, 0)
            grads: dict[str, np.ndarray] = {}
            p1_backward(theta, cache, dscores, grads)
            adam_step(adam, theta, grads)
            _decay_weights(theta, config.lr, config.weight_decay)
            epoch_loss += loss
        losses.append(epoch_loss / len(train_inputs))
        # sequential single-example updates orbit the optimum; averaging the
        # late-phase iterates removes that oscillation before selection
        candidate = theta
        if config.average_from and epoch + 1 >= config.average_from:
            n_avg += 1
            if averaged is None:
                averaged = _snapshot(theta)
            else:
                for key, value in theta.items():
                    averaged[key] += (value - averaged[key]) / n_avg
            candidate = averaged
        metric = _val_query_rank(candidate, encoder, graphs, val_inputs, fills)
        val_curve.append(metric)
        log(f"p1 epoch {epoch + 1}: train loss {losses[-1]:.4f}, val query rank {metric:.3f}")
        if stopper.update(metric, candidate):
            break
    stopper.restore(theta)
    bundle.theta = theta
    bundle.history["p1"] = {"train_loss": losses, "val_rank": val_curve, "best": stopper.best}
    return losses


def _draw_negatives(rng, n_templates: int, positive: int, m: int) -> list[int]:
    out = []
    for _ in range(m):
        draw = int(rng.integers(0, n_templates - 1))
        if draw >= positive:
            draw += 1
        out.append(draw)
    return out


def _fill_counts(catalog, si: ScenarioInputs) -> np.ndarray:
    """Candidate-combination count per template for this deployment."""

    counts = []
    for entry in catalog:
        n = 1
        for kind_name in entry.template.blank_kinds:
            n *= len(si.cand_ids[KIND_FOR_BLANK[kind_name]])
        counts.append(n)
    # a wrong template's realistic ranking cost is its top few fills, not
    # its whole cross product; cap at the prediction-time combo budget
    return np.minimum(np.array(counts, dtype=np.float64), 10.0)


def _val_query_rank(theta, encoder, graphs, val_inputs, fills) -> float:
    """Validation average rank of the true query, assuming the parameter
    model ranks the true fill first: one plus the fill counts of every
    template scored above the truth. Confidently wrong wide templates are
    penalized by their whole fill count, which is what the final ranking
    pays."""

    v_t, _ = _chunked_encode(theta, graphs)
    ranks = []
    for si in val_inputs:
        if si.gt_template is None:
            continue
        scores = p1_scores_from_vt(theta, encoder, si.token_text, si.log_vec, v_t)
        s = scores[si.gt_template]
        ahead = (scores > s) | ((scores == s) & (np.arange(len(scores)) < si.gt_template))
        ranks.append(1.0 + float(fills[ahead].sum()))
    return float(np.mean(ranks)) if ranks else np.inf


# P2 -------------------------------------------------------------------------


def _train_p2(bundle, dims, train_inputs, val_inputs, config, log):
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2]))
    phi = init_phi(rng, dims)
    graphs = [e.graph for e in bundle.catalog]
    # the graph encoder is frozen during parameter training, so blank
    # vectors are constants here
    _, blank_vecs = _chunked_encode(bundle.theta, graphs)

    def blank_jobs(si: ScenarioInputs):
        entry = bundle.catalog.entries[si.gt_template]
        jobs = []
        for blank_no, kind_name in enumerate(entry.template.blank_kinds):
            kind = KIND_FOR_BLANK[kind_name]
            v_b = blank_vecs[entry.index][blank_no + 1]
            jobs.append((v_b, si.cand_x[kind], si.gt_cand_idx[blank_no]))
        return jobs

    train_jobs = [(si, blank_jobs(si)) for si in train_inputs if si.gt_template is not None and si.gt_cand_idx]
    val_jobs = [(si, blank_jobs(si)) for si in val_inputs if si.gt_template is not None and si.gt_cand_idx]
    if not train_jobs:
        bundle.phi = phi
        bundle.history["p2"] = {"skipped": "no parameterized templates in training"}
        return

    adam = AdamState(lr=config.lr)
    stopper = _EarlyStop(config.patience)
    losses, val_curve = [], []
    for epoch in range(config.epochs):
        order = rng.permutation(len(train_jobs))
        epoch_loss = 0.0
        for idx in order:
            _, jobs = train_jobs[idx]
            grads: dict[str, np.ndarray] = {}
            total = 0.0
            for v_b, cand_x, target in jobs:
                scores, cache = p2_forward(phi, v_b, cand_x)
                loss, dscores = cross_entropy(scores, target)
                p2_backward(phi, cache, dscores, grads)
                total += loss
            adam_step(adam, phi, grads)
            _decay_weights(phi, config.lr, config.weight_decay)
            epoch_loss += total
        losses.append(epoch_loss / len(train_jobs))
        metric = _val_param_rank(phi, val_jobs)
        val_curve.append(metric)
        log(f"p2 epoch {epoch + 1}: train loss {losses[-1]:.4f}, val param rank {metric:.3f}")
        if stopper.update(metric, phi):
            break
    stopper.restore(phi)
    bundle.phi = phi
    bundle.history["p2"] = {"train_loss": losses, "val_rank": val_curve, "best": stopper.best}


def _val_param_rank(phi, val_jobs) -> float:
    ranks = []
    for _, jobs in val_jobs:
        for v_b, cand_x, target in jobs:
            scores, _ = p2_forward(phi, v_b, cand_x)
            ranks.append(_rank_of(scores, target))
    return float(np.mean(ranks)) if ranks else np.inf


# classifier baseline ---------------------------------------------------------


def _train_classifier(bundle, dims, train_inputs, val_inputs, config, log):
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 3]))
    theta = init_classifier_theta(rng, dims)
    encoder = bundle.text_encoder()
    adam = AdamState(lr=config.lr)
    stopper = _EarlyStop(config.patience)
    losses, val_curve = [], []
    for epoch in range(config.epochs):
        order = rng.permutation(len(train_inputs))
        epoch_loss = 0.0
        for idx in order:
            si = train_inputs[idx]
            logits, cache = classifier_forward(theta, encoder, si.token_text, si.log_vec)
            loss, dlogits = cross_entropy(logits, si.gt_template)
            grads: dict[str, np.ndarray] = {}
            classifier_backward(theta, cache, dlogits, grads)
            adam_step(adam, theta, grads)
            _decay_weights(theta, config.lr, config.weight_decay)
            epoch_loss += loss
        losses.append(epoch_loss / len(train_inputs))
        fills = _fill_counts(bundle.catalog, val_inputs[0]) if val_inputs else None
        ranks = []
        for si in val_inputs:
            if si.gt_template is None:
                continue
            logits, _ = classifier_forward(theta, encoder, si.token_text, si.log_vec)
            s = logits[si.gt_template]
            ahead = (logits > s) | ((logits == s) & (np.arange(len(logits)) < si.gt_template))
            ranks.append(1.0 + float(fills[ahead].sum()))
        metric = float(np.mean(ranks)) if ranks else np.inf
        val_curve.append(metric)
        log(f"classifier epoch {epoch + 1}: loss {losses[-1]:.4f}, val query rank {metric:.3f}")
        if stopper.update(metric, theta):
            break
    stopper.restore(theta)
    bundle.theta = theta
    bundle.history["p1"] = {"train_loss": losses, "val_rank": val_curve, "best": stopper.best}


# joint (monolithic) baseline --------------------------------------------------


def build_query_space(catalog: TemplateCatalog, reference: ScenarioInputs) -> list[tuple[int, tuple]]:
    """Every fully-formed query the joint model scores: catalog template x
    kind-valid parameter combos (multi-blank combos capped, ascending ids)."""

    space: list[tuple[int, tuple]] = []
    for entry in catalog:
        kinds = [KIND_FOR_BLANK[k] for k in entry.template.blank_kinds]
        if not kinds:
            space.append((entry.index, ()))
            continue
        pools = [reference.cand_ids[kind] for kind in kinds]
        combos = itertools.product(*pools)
        if len(kinds) > 1:
            combos = itertools.islice(combos, MONO_COMBO_CAP)
        for combo in combos:
            space.append((entry.index, tuple(combo)))
    return space


def _space_graphs(catalog: TemplateCatalog, space: list[tuple[int, tuple]]):
    graphs = []
    for t_idx, params in space:
        entry = catalog.entries[t_idx]
        filled = fill_blanks(entry.template, ParamAssignment(values=params))
        graphs.append(ast_to_graph(filled, identity_buckets=MONO_ID_BUCKETS))
    return graphs


def _train_monolithic(bundle, dims, train_inputs, val_inputs, config, log):
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 4]))
    theta = init_theta(rng, dims)
    encoder = bundle.text_encoder()
    space = build_query_space(bundle.catalog, train_inputs[0])
    index_of = {key: i for i, key in enumerate(space)}
    graphs = _space_graphs(bundle.catalog, space)

    def space_index(si: ScenarioInputs) -> int:
        key = (si.gt_template, tuple(si.gt_params))
        if key not in index_of:
            raise ModelError(f"ground truth {si.gt_text!r} outside the joint query space")
        return index_of[key]

    targets = [space_index(si) for si in train_inputs]
    val_sub = val_inputs
    if config.val_subsample and len(val_inputs) > config.val_subsample:
        pick = np.random.default_rng(np.random.SeedSequence([config.seed, 5])).permutation(len(val_inputs))
        val_sub = [val_inputs[i] for i in pick[: config.val_subsample]]
    val_targets = [space_index(si) for si in val_sub]

    adam = AdamState(lr=config.lr)
    stopper = _EarlyStop(config.patience)
    losses, val_curve = [], []
    for epoch in range(config.epochs):
        order = rng.permutation(len(train_inputs))
        epoch_loss = 0.0
        for idx in order:
            si = train_inputs[idx]
            negatives = _draw_negatives(rng, len(space), targets[idx], config.m_negatives)
            chosen = [targets[idx]] + negatives
            scores, cache = p1_forward(theta, encoder, si.token_text, si.log_vec, [graphs[i] for i in chosen])
            loss, dscores = cross_entropy(scores, 0)
            grads: dict[str, np.ndarray] = {}
            p1_backward(theta, cache, dscores, grads)
            adam_step(adam, theta, grads)
            _decay_weights(theta, config.lr, config.weight_decay)
            epoch_loss += loss
        losses.append(epoch_loss / len(train_inputs))
        v_q, _ = _chunked_encode(theta, graphs)
        ranks = [
            _rank_of(p1_scores_from_vt(theta, encoder, si.token_text, si.log_vec, v_q), val_targets[i])
            for i, si in enumerate(val_sub)
        ]
        metric = float(np.mean(ranks)) if ranks else np.inf
        val_curve.append(metric)
        log(f"joint epoch {epoch + 1}: loss {losses[-1]:.4f}, val query rank {metric:.3f}")
        if stopper.update(metric, theta):
            break
    stopper.restore(theta)
    bundle.theta = theta
    bundle.query_space = space
    bundle.history["p1"] = {"train_loss": losses, "val_rank": val_curve, "best": stopper.best}
