"""Minimal neural toolkit with exact handwritten gradients."""

from .ops import (
    cross_entropy,
    dense_backward,
    dense_forward,
    glorot,
    log_softmax,
    nce_loss,
    relu,
    relu_backward,
    softmax,
)
from .gcn import GcnStack, encode_graph, gcn_backward, gcn_forward, normalized_adjacency
from .text import OOV, TextEncoder, build_vocabulary, encode_text, encode_text_backward, tokenize
from .optim import AdamState, adam_step
from .serialize import load_tensors, save_tensors

__all__ = [
    "cross_entropy",
    "dense_backward",
    "dense_forward",
    "glorot",
    "log_softmax",
    "nce_loss",
    "relu",
    "relu_backward",
    "softmax",
    "GcnStack",
    "encode_graph",
    "gcn_backward",
    "gcn_forward",
    "normalized_adjacency",
    "OOV",
    "TextEncoder",
    "build_vocabulary",
    "encode_text",
    "encode_text_backward",
    "tokenize",
    "AdamState",
    "adam_step",
    "load_tensors",
    "save_tensors",
]
