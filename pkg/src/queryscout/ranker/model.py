"""Forward/backward passes for the template scorer, the parameter scorer,
and the label-classifier variant.

Architecture (hidden width h):
    v_T = GCN(template)[root]
    v_R = mean token embedding of the report (plus choice-flag tokens)
    v_L = Linear(log vector)
    v_S = Linear(ReLU(Linear([v_R ; v_L ; v_T])))
    S(T,R,L)   = Linear(ReLU(Linear([v_S ; v_T])))          -> template score
    S(u,b,T,L) = Linear(ReLU(Linear([v_b ; L_u ; rank_u]))) -> parameter score

Ranking probabilities are softmaxes of these scores. All passes are exact;
gradient checks cover each path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dsl import AstGraph
from ..neural import (
    GcnStack,
    TextEncoder,
    dense_backward,
    dense_forward,
    encode_text,
    encode_text_backward,
    gcn_backward,
    gcn_forward,
    glorot,
    normalized_adjacency,
    relu,
    relu_backward,
)

HIDDEN = 300


@dataclass(frozen=True)
class ModelDims:
    node_feat_width: int
    log_dim: int
    cand_width: int
    vocab_size: int
    catalog_size: int
    hidden: int = HIDDEN


def init_theta(rng: np.random.Generator, dims: ModelDims) -> dict[str, np.ndarray]:
    h = dims.hidden
    return {
        # depth must cover the root-to-leaf distance of the deepest
        # template (~4 hops), or structurally close templates collapse to
        # identical root vectors
        "gcn.w0": glorot(rng, (dims.node_feat_width, h)),
        "gcn.w1": glorot(rng, (h, h)),
        "gcn.w2": glorot(rng, (h, h)),
        "gcn.w3": glorot(rng, (h, h)),
        "emb": rng.uniform(-0.05, 0.05, size=(max(1, dims.vocab_size), h)),
        "log.w": glorot(rng, (h, dims.log_dim)),
        "log.b": np.zeros(h),
        "fuse1.w": glorot(rng, (h, 3 * h)),
        "fuse1.b": np.zeros(h),
        "fuse2.w": glorot(rng, (h, h)),
        "fuse2.b": np.zeros(h),
        "head1.w": glorot(rng, (h, 2 * h)),
        "head1.b": np.zeros(h),
        "head2.w": glorot(rng, (1, h)),
        "head2.b": np.zeros(1),
    }


def init_phi(rng: np.random.Generator, dims: ModelDims) -> dict[str, np.ndarray]:
    h = dims.hidden
    return {
        "p2l1.w": glorot(rng, (h, h + 2 * dims.cand_width)),
        "p2l1.b": np.zeros(h),
        "p2l2.w": glorot(rng, (1, h)),
        "p2l2.b": np.zeros(1),
    }


def init_classifier_theta(rng: np.random.Generator, dims: ModelDims) -> dict[str, np.ndarray]:
    h = dims.hidden
    return {
        # the graph encoder stays at its seeded init; only the parameter
        # scorer reads it (template selection is label-based here)
        "gcn.w0": glorot(rng, (dims.node_feat_width, h)),
        "gcn.w1": glorot(rng, (h, h)),
        "gcn.w2": glorot(rng, (h, h)),
        "gcn.w3": glorot(rng, (h, h)),
        "emb": rng.uniform(-0.05, 0.05, size=(max(1, dims.vocab_size), h)),
        "log.w": glorot(rng, (h, dims.log_dim)),
        "log.b": np.zeros(h),
        "cls1.w": glorot(rng, (h, 2 * h)),
        "cls1.b": np.zeros(h),
        "cls2.w": glorot(rng, (dims.catalog_size, h)),
        "cls2.b": np.zeros(dims.catalog_size),
    }


def gcn_stack(theta: dict[str, np.ndarray]) -> GcnStack:
    weights = []
    for i in range(8):
        name = f"gcn.w{i}"
        if name not in theta:
            break
        weights.append(theta[name])
    return GcnStack(weights=weights)


# graph batching -------------------------------------------------------------


@dataclass
class GraphBatch:
    """Several template graphs stacked into one block-diagonal system."""

    a_hat: np.ndarray
    feats: np.ndarray
    root_rows: list[int]
    blank_rows: list[dict[int, int]]


def batch_graphs(graphs: list[AstGraph]) -> GraphBatch:
    total = sum(g.num_nodes for g in graphs)
    width = graphs[0].node_features.shape[1]
    a_hat = np.zeros((total, total))
    feats = np.zeros((total, width))
    root_rows: list[int] = []
    blank_rows: list[dict[int, int]] = []
    offset = 0
    for g in graphs:
        n = g.num_nodes
        a_hat[offset : offset + n, offset : offset + n] = normalized_adjacency(g)
        feats[offset : offset + n] = g.node_features
        root_rows.append(offset + g.root_index)
        blank_rows.append({b: offset + row for b, row in g.blank_indices.items()})
        offset += n
    return GraphBatch(a_hat=a_hat, feats=feats, root_rows=root_rows, blank_rows=blank_rows)


# template scoring (P1) -------------------------------------------------------


def p1_forward(
    theta: dict[str, np.ndarray],
    encoder: TextEncoder,
    text: str,
    log_vec: np.ndarray,
    graphs: list[AstGraph],
):
    """Scores for each graph given one (report, log) pair."""

    h = theta["fuse2.w"].shape[0]
    v_r, token_ids = encode_text(encoder, theta["emb"], text)
    v_l = dense_forward(theta["log.w"], theta["log.b"], log_vec)
    batch = batch_graphs(graphs)
    nodes, gcache = gcn_forward(gcn_stack(theta), batch.a_hat, batch.feats)
    v_t = nodes[batch.root_rows]  # (n, h)

    n = len(graphs)
    x = np.concatenate([np.tile(v_r, (n, 1)), np.tile(v_l, (n, 1)), v_t], axis=1)
    a1 = dense_forward(theta["fuse1.w"], theta["fuse1.b"], x)
    h1 = relu(a1)
    v_s = dense_forward(theta["fuse2.w"], theta["fuse2.b"], h1)
    y = np.concatenate([v_s, v_t], axis=1)
    a2 = dense_forward(theta["head1.w"], theta["head1.b"], y)
    h2 = relu(a2)
    scores = dense_forward(theta["head2.w"], theta["head2.b"], h2).ravel()

    cache = (token_ids, log_vec, batch, gcache, x, a1, h1, y, a2, h2, h)
    return scores, cache


def p1_backward(theta: dict[str, np.ndarray], cache, dscores: np.ndarray, grads: dict[str, np.ndarray]) -> None:
    token_ids, log_vec, batch, gcache, x, a1, h1, y, a2, h2, h = cache
    n = dscores.shape[0]

    dy1 = dscores[:, None]
    _, dw, db = dense_backward(theta["head2.w"], h2, dy1)
    _acc(grads, "head2.w", dw)
    _acc(grads, "head2.b", db)
    dh2 = dy1 @ theta["head2.w"]
    da2 = relu_backward(a2, dh2)
    dyc, dw, db = dense_backward(theta["head1.w"], y, da2)
    _acc(grads, "head1.w", dw)
    _acc(grads, "head1.b", db)
    dv_s = dyc[:, :h]
    dv_t = dyc[:, h:].copy()

    dh1, dw, db = dense_backward(theta["fuse2.w"], h1, dv_s)
    _acc(grads, "fuse2.w", dw)
    _acc(grads, "fuse2.b", db)
    da1 = relu_backward(a1, dh1)
    dx, dw, db = dense_backward(theta["fuse1.w"], x, da1)
    _acc(grads, "fuse1.w", dw)
    _acc(grads, "fuse1.b", db)

    dv_r = dx[:, :h].sum(axis=0)
    dv_l = dx[:, h : 2 * h].sum(axis=0)
    dv_t += dx[:, 2 * h :]

    d_nodes = np.zeros((batch.a_hat.shape[0], h))
    for i, row in enumerate(batch.root_rows):
        d_nodes[row] += dv_t[i]
    gw, _ = gcn_backward(gcn_stack(theta), gcache, d_nodes)
    for i, g in enumerate(gw):
        _acc(grads, f"gcn.w{i}", g)

    _acc(grads, "log.w", np.outer(dv_l, log_vec))
    _acc(grads, "log.b", dv_l)
    if "emb" not in grads:
        grads["emb"] = np.zeros_like(theta["emb"])
    encode_text_backward(grads["emb"], token_ids, dv_r)


def encode_templates(theta: dict[str, np.ndarray], graphs: list[AstGraph]):
    """Frozen-weight encodings of every template: (V_T, per-entry blank vecs)."""

    batch = batch_graphs(graphs)
    nodes, _ = gcn_forward(gcn_stack(theta), batch.a_hat, batch.feats)
    v_t = nodes[batch.root_rows].copy()
    v_b = [
        {blank: nodes[row].copy() for blank, row in rows.items()}
        for rows in batch.blank_rows
    ]
    return v_t, v_b


def p1_scores_from_vt(
    theta: dict[str, np.ndarray],
    encoder: TextEncoder,
    text: str,
    log_vec: np.ndarray,
    v_t: np.ndarray,
) -> np.ndarray:
    """Fast inference path over precomputed template encodings."""

    h = theta["fuse2.w"].shape[0]
    v_r, _ = encode_text(encoder, theta["emb"], text)
    v_l = dense_forward(theta["log.w"], theta["log.b"], log_vec)
    n = v_t.shape[0]
    x = np.concatenate([np.tile(v_r, (n, 1)), np.tile(v_l, (n, 1)), v_t], axis=1)
    h1 = relu(dense_forward(theta["fuse1.w"], theta["fuse1.b"], x))
    v_s = dense_forward(theta["fuse2.w"], theta["fuse2.b"], h1)
    y = np.concatenate([v_s, v_t], axis=1)
    h2 = relu(dense_forward(theta["head1.w"], theta["head1.b"], y))
    return dense_forward(theta["head2.w"], theta["head2.b"], h2).ravel()


# parameter scoring (P2) -------------------------------------------------------


def p2_forward(phi: dict[str, np.ndarray], v_b: np.ndarray, cand_x: np.ndarray):
    """Scores over candidate subsystems for one blank."""

    n = cand_x.shape[0]
    x = np.concatenate([np.tile(v_b, (n, 1)), cand_x], axis=1)
    a1 = dense_forward(phi["p2l1.w"], phi["p2l1.b"], x)
    h1 = relu(a1)
    scores = dense_forward(phi["p2l2.w"], phi["p2l2.b"], h1).ravel()
    return scores, (x, a1, h1)


def p2_backward(phi: dict[str, np.ndarray], cache, dscores: np.ndarray, grads: dict[str, np.ndarray]) -> np.ndarray:
    """Accumulates phi grads; returns the gradient w.r.t. v_b."""

    x, a1, h1 = cache
    h = phi["p2l1.w"].shape[0]
    dy = dscores[:, None]
    _, dw, db = dense_backward(phi["p2l2.w"], h1, dy)
    _acc(grads, "p2l2.w", dw)
    _acc(grads, "p2l2.b", db)
    dh1 = dy @ phi["p2l2.w"]
    da1 = relu_backward(a1, dh1)
    dx, dw, db = dense_backward(phi["p2l1.w"], x, da1)
    _acc(grads, "p2l1.w", dw)
    _acc(grads, "p2l1.b", db)
    return dx[:, :h].sum(axis=0)


def p2_scores(phi: dict[str, np.ndarray], v_b: np.ndarray, cand_x: np.ndarray) -> np.ndarray:
    scores, _ = p2_forward(phi, v_b, cand_x)
    return scores


# label-classifier template scoring -------------------------------------------


def classifier_forward(theta: dict[str, np.ndarray], encoder: TextEncoder, text: str, log_vec: np.ndarray):
    v_r, token_ids = encode_text(encoder, theta["emb"], text)
    v_l = dense_forward(theta["log.w"], theta["log.b"], log_vec)
    x = np.concatenate([v_r, v_l])
    a1 = dense_forward(theta["cls1.w"], theta["cls1.b"], x)
    h1 = relu(a1)
    logits = dense_forward(theta["cls2.w"], theta["cls2.b"], h1)
    return logits, (token_ids, log_vec, x, a1, h1)


def classifier_backward(theta: dict[str, np.ndarray], cache, dlogits: np.ndarray, grads: dict[str, np.ndarray]) -> None:
    token_ids, log_vec, x, a1, h1, = cache
    h = theta["cls1.w"].shape[0]
    _, dw, db = dense_backward(theta["cls2.w"], h1, dlogits)
    _acc(grads, "cls2.w", dw)
    _acc(grads, "cls2.b", db)
    dh1 = dlogits @ theta["cls2.w"]
    da1 = relu_backward(a1, dh1)
    dx, dw, db = dense_backward(theta["cls1.w"], x, da1)
    _acc(grads, "cls1.w", dw)
    _acc(grads, "cls1.b", db)
    dv_r = dx[:h]
    dv_l = dx[h:]
    _acc(grads, "log.w", np.outer(dv_l, log_vec))
    _acc(grads, "log.b", dv_l)
    if "emb" not in grads:
        grads["emb"] = np.zeros_like(theta["emb"])
    encode_text_backward(grads["emb"], token_ids, dv_r)


def _acc(grads: dict[str, np.ndarray], name: str, value: np.ndarray) -> None:
    if name in grads:
        grads[name] += value
    else:
        grads[name] = value.copy() if isinstance(value, np.ndarray) else value
