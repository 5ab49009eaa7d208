import numpy as np
import pytest

from queryscout.dsl import Dialect, ast_to_graph, parse_query, template_from_ast
from queryscout.errors import ModelError
from queryscout.neural import (
    AdamState,
    GcnStack,
    TextEncoder,
    adam_step,
    build_vocabulary,
    cross_entropy,
    dense_backward,
    dense_forward,
    encode_text,
    encode_text_backward,
    gcn_backward,
    gcn_forward,
    load_tensors,
    nce_loss,
    normalized_adjacency,
    save_tensors,
    softmax,
    tokenize,
)

RNG = np.random.default_rng(1234)


def finite_diff(loss_fn, array, eps=1e-6):
    grad = np.zeros_like(array)
    it = np.nditer(array, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = array[idx]
        array[idx] = old + eps
        up = loss_fn()
        array[idx] = old - eps
        down = loss_fn()
        array[idx] = old
        grad[idx] = (up - down) / (2 * eps)
    return grad


def max_rel_err(analytic, numeric):
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


class TestDense:
    def test_identity(self):
        x = RNG.normal(size=4)
        y = dense_forward(np.eye(4), np.zeros(4), x)
        assert np.allclose(y, x)

    def test_one_by_one(self):
        y = dense_forward(np.array([[2.0]]), np.array([3.0]), np.array([4.0]))
        assert y.tolist() == [11.0]

    def test_shape_mismatch(self):
        with pytest.raises(ModelError):
            dense_forward(np.ones((2, 3)), np.zeros(2), np.ones(4))

    def test_gradients_match_finite_differences(self):
        w = RNG.normal(size=(5, 3))
        b = RNG.normal(size=5)
        x = RNG.normal(size=3)
        target = RNG.normal(size=5)

        def loss():
            return 0.5 * float(np.sum((dense_forward(w, b, x) - target) ** 2))

        dy = dense_forward(w, b, x) - target
        dx, dw, db = dense_backward(w, x, dy)
        assert max_rel_err(dw, finite_diff(loss, w)) < 1e-6
        assert max_rel_err(db, finite_diff(loss, b)) < 1e-6
        assert max_rel_err(dx, finite_diff(loss, x)) < 1e-6

    def test_batch_gradients(self):
        w = RNG.normal(size=(4, 3))
        b = RNG.normal(size=4)
        x = RNG.normal(size=(6, 3))
        target = RNG.normal(size=(6, 4))

        def loss():
            return 0.5 * float(np.sum((dense_forward(w, b, x) - target) ** 2))

        dy = dense_forward(w, b, x) - target
        dx, dw, db = dense_backward(w, x, dy)
        assert max_rel_err(dw, finite_diff(loss, w)) < 1e-6
        assert max_rel_err(dx, finite_diff(loss, x)) < 1e-6


class TestSoftmaxLosses:
    def test_softmax_normalized(self):
        for _ in range(20):
            s = RNG.normal(size=RNG.integers(2, 12)) * 10
            p = softmax(s)
            assert np.all(p > 0)
            assert abs(p.sum() - 1.0) < 1e-12

    def test_uniform_nce_is_log3(self):
        loss, _ = nce_loss(0.7, np.array([0.7, 0.7]))
        assert loss == pytest.approx(np.log(3.0), abs=1e-12)

    def test_dominant_positive_drives_loss_to_zero(self):
        loss, _ = nce_loss(60.0, np.array([0.0, 0.0]))
        assert loss < 1e-12

    def test_nce_needs_a_negative(self):
        with pytest.raises(ModelError):
            nce_loss(1.0, np.array([]))

    def test_nce_gradient_matches_finite_differences(self):
        scores = RNG.normal(size=4)

        def loss():
            l, _ = nce_loss(scores[0], scores[1:])
            return l

        _, ds = nce_loss(scores[0], scores[1:])
        assert max_rel_err(ds, finite_diff(loss, scores)) < 1e-6

    def test_cross_entropy_gradient(self):
        scores = RNG.normal(size=7)

        def loss():
            return cross_entropy(scores, 3)[0]

        _, ds = cross_entropy(scores, 3)
        assert max_rel_err(ds, finite_diff(loss, scores)) < 1e-6


class TestGcn:
    def graph(self, text="SELECT span FROM spans WHERE name=_", dialect=Dialect.TRACE):
        return ast_to_graph(template_from_ast(parse_query(text, dialect)))

    def test_single_node_identity(self):
        import dataclasses

        g = self.graph()
        single = dataclasses.replace(
            g, node_features=np.abs(RNG.normal(size=(1, 4))), edges=(), root_index=0, blank_indices={}
        )
        stack = GcnStack(weights=[np.eye(4), np.eye(4)])
        out, _ = gcn_forward(stack, normalized_adjacency(single), single.node_features)
        assert np.allclose(out, single.node_features)

    def test_symmetric_nodes_get_equal_vectors(self):
        import dataclasses

        g = self.graph()
        feats = np.tile(np.abs(RNG.normal(size=4)), (2, 1))
        pair = dataclasses.replace(g, node_features=feats, edges=((0, 1),), root_index=0, blank_indices={})
        stack = GcnStack.init(np.random.default_rng(0), 4, 6)
        out, _ = gcn_forward(stack, normalized_adjacency(pair), pair.node_features)
        assert np.allclose(out[0], out[1])

    def test_permutation_equivariance(self):
        g = self.graph()
        n = g.num_nodes
        stack = GcnStack.init(np.random.default_rng(2), g.node_features.shape[1], 8)
        out, _ = gcn_forward(stack, normalized_adjacency(g), g.node_features)

        perm = np.random.default_rng(3).permutation(n)
        inv = np.empty(n, dtype=int)
        inv[perm] = np.arange(n)
        import dataclasses

        permuted = dataclasses.replace(
            g,
            node_features=g.node_features[perm],
            edges=tuple((int(inv[a]), int(inv[b])) for a, b in g.edges),
            root_index=int(inv[g.root_index]),
            blank_indices={k: int(inv[v]) for k, v in g.blank_indices.items()},
        )
        out_p, _ = gcn_forward(stack, normalized_adjacency(permuted), permuted.node_features)
        assert np.allclose(out_p, out[perm])
        assert np.allclose(out_p[permuted.root_index], out[g.root_index])

    def test_gradients_match_finite_differences(self):
        g = self.graph()
        stack = GcnStack.init(np.random.default_rng(4), g.node_features.shape[1], 5, depth=3)
        a_hat = normalized_adjacency(g)
        target = RNG.normal(size=5)

        def loss():
            out, _ = gcn_forward(stack, a_hat, g.node_features)
            return 0.5 * float(np.sum((out[g.root_index] - target) ** 2))

        out, cache = gcn_forward(stack, a_hat, g.node_features)
        d_out = np.zeros_like(out)
        d_out[g.root_index] = out[g.root_index] - target
        grads, _ = gcn_backward(stack, cache, d_out)
        for i, w in enumerate(stack.weights):
            assert max_rel_err(grads[i], finite_diff(loss, w)) < 1e-5


class TestTextEncoder:
    def make(self):
        vocab = build_vocabulary(["the page is slow", "the page is empty", "slow page"], min_freq=2)
        table = np.random.default_rng(5).normal(size=(len(vocab), 6))
        return TextEncoder(vocab=vocab, dim=6), table

    def test_tokenize(self):
        assert tokenize("Page took FOREVER, 100% broken!") == ["page", "took", "forever", "100", "broken"]

    def test_empty_text_is_zero(self):
        enc, table = self.make()
        vec, ids = encode_text(enc, table, "")
        assert ids == []
        assert np.all(vec == 0)

    def test_single_token_is_row(self):
        enc, table = self.make()
        vec, _ = encode_text(enc, table, "page")
        assert np.allclose(vec, table[enc.vocab["page"]])

    def test_two_tokens_mean(self):
        enc, table = self.make()
        vec, _ = encode_text(enc, table, "slow page")
        expect = (table[enc.vocab["slow"]] + table[enc.vocab["page"]]) / 2
        assert np.allclose(vec, expect)

    def test_oov_maps_to_row_zero(self):
        enc, table = self.make()
        _, ids = encode_text(enc, table, "unheardof")
        assert ids == [0]

    def test_min_freq_filters(self):
        enc, _ = self.make()
        assert "empty" not in enc.vocab  # appears once

    def test_backward_distributes_evenly(self):
        enc, table = self.make()
        _, ids = encode_text(enc, table, "slow page")
        grad = np.zeros_like(table)
        d_vec = np.ones(6)
        encode_text_backward(grad, ids, d_vec)
        assert np.allclose(grad[enc.vocab["slow"]], 0.5)
        assert np.allclose(grad[enc.vocab["page"]], 0.5)


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        params = {"w": np.array([1.0, -2.0])}
        state = AdamState()
        adam_step(state, params, {"w": np.zeros(2)})
        assert np.allclose(params["w"], [1.0, -2.0])
        assert state.step == 1

    def test_first_step_magnitude_is_lr(self):
        # bias correction cancels on step one: update = lr * sign(g)
        params = {"w": np.zeros(3)}
        state = AdamState(lr=1e-3)
        g = np.array([0.5, -2.0, 10.0])
        adam_step(state, params, {"w": g.copy()})
        assert np.allclose(params["w"], -1e-3 * np.sign(g), atol=1e-9)

    def test_quadratic_descends(self):
        params = {"w": np.array([3.0])}
        state = AdamState(lr=0.05)
        losses = []
        for _ in range(50):
            losses.append(float(params["w"][0] ** 2))
            adam_step(state, params, {"w": 2 * params["w"]})
        assert losses[-1] < losses[0]
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_nonfinite_gradient_rejected(self):
        with pytest.raises(ModelError):
            adam_step(AdamState(), {"w": np.zeros(1)}, {"w": np.array([np.inf])})

    def test_matches_reference_implementation(self):
        rng = np.random.default_rng(8)
        params = {"w": rng.normal(size=4)}
        ref = params["w"].copy()
        state = AdamState(lr=0.01)
        m = np.zeros(4)
        v = np.zeros(4)
        for t in range(1, 6):
            g = rng.normal(size=4)
            adam_step(state, params, {"w": g.copy()})
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            ref -= 0.01 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
        assert np.allclose(params["w"], ref, atol=1e-12)


class TestSerialize:
    def test_round_trip(self, tmp_path):
        tensors = {
            "a.w": RNG.normal(size=(3, 4)),
            "b": RNG.normal(size=7),
        }
        meta = {"vocab": {"x": 1}, "note": "fixture"}
        path = tmp_path / "model.qsb"
        save_tensors(path, tensors, meta)
        loaded, loaded_meta = load_tensors(path)
        assert loaded_meta == meta
        for name in tensors:
            assert np.array_equal(loaded[name], tensors[name])

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.qsb"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ModelError):
            load_tensors(path)
