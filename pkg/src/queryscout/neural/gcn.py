"""Graph convolution over query-template graphs.

Propagation per layer: H' = ReLU(A_hat H W) with A_hat the symmetrically
normalized adjacency with self-loops. The stack returns a vector per node;
callers index the root (whole-template vector) and blank nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dsl import AstGraph
from .ops import glorot, relu, relu_backward


def normalized_adjacency(graph: AstGraph) -> np.ndarray:
    """A_hat = D^{-1/2} (A + I) D^{-1/2}; symmetric by construction."""

    n = graph.num_nodes
    adj = np.eye(n)
    for a, b in graph.edges:
        adj[a, b] = 1.0
        adj[b, a] = 1.0
    deg = adj.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    return adj * inv_sqrt[:, None] * inv_sqrt[None, :]


@dataclass
class GcnStack:
    """Layer weights, each (in, out); widths chain input -> hidden -> hidden."""

    weights: list[np.ndarray]

    @staticmethod
    def init(rng: np.random.Generator, in_width: int, hidden: int, depth: int = 4) -> "GcnStack":
        widths = [in_width] + [hidden] * depth
        weights = [glorot(rng, (widths[i + 1], widths[i])).T.copy() for i in range(depth)]
        return GcnStack(weights=weights)

    def param_names(self, prefix: str = "gcn") -> list[str]:
        return [f"{prefix}.w{i}" for i in range(len(self.weights))]

    def params(self, prefix: str = "gcn") -> dict[str, np.ndarray]:
        return {f"{prefix}.w{i}": w for i, w in enumerate(self.weights)}


def gcn_forward(stack: GcnStack, a_hat: np.ndarray, features: np.ndarray):
    """Returns (node_vectors, cache) with cache for the backward pass."""

    h = features
    pre_acts = []
    inputs = []
    for w in stack.weights:
        ah = a_hat @ h
        z = ah @ w
        inputs.append(ah)
        pre_acts.append(z)
        h = relu(z)
    return h, (a_hat, inputs, pre_acts)


def gcn_backward(stack: GcnStack, cache, d_out: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Gradients for every layer weight plus the input features."""

    a_hat, inputs, pre_acts = cache
    dh = d_out
    grads: list[np.ndarray] = [np.zeros_like(w) for w in stack.weights]
    for i in reversed(range(len(stack.weights))):
        dz = relu_backward(pre_acts[i], dh)
        grads[i] = inputs[i].T @ dz
        dh = a_hat.T @ (dz @ stack.weights[i].T)
    return grads, dh


def encode_graph(stack: GcnStack, graph: AstGraph):
    """Convenience forward: per-node vectors plus root/blank indexing."""

    a_hat = normalized_adjacency(graph)
    vectors, cache = gcn_forward(stack, a_hat, graph.node_features)
    return vectors, cache
