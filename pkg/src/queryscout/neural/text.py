"""Trainable bag-of-embeddings text encoder.

Tokens are lowercased alphanumeric runs; unknown tokens share one OOV row.
Encoding is the mean of the token embedding rows (zero vector for empty
text), trained jointly with the rest of the model. An externally computed
report vector of the right width can be substituted wherever a report
would be encoded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

OOV = "<oov>"

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def build_vocabulary(texts: list[str], min_freq: int = 2) -> dict[str, int]:
    """Token -> row index; row 0 is the OOV token."""

    counts: dict[str, int] = {}
    for text in texts:
        for token in tokenize(text):
            counts[token] = counts.get(token, 0) + 1
    vocab = {OOV: 0}
    for token in sorted(counts):
        if counts[token] >= min_freq:
            vocab[token] = len(vocab)
    return vocab


@dataclass
class TextEncoder:
    vocab: dict[str, int]
    dim: int

    @staticmethod
    def init(rng: np.random.Generator, vocab: dict[str, int], dim: int) -> tuple["TextEncoder", np.ndarray]:
        table = rng.uniform(-0.05, 0.05, size=(max(1, len(vocab)), dim))
        return TextEncoder(vocab=vocab, dim=dim), table

    def token_ids(self, text: str) -> list[int]:
        return [self.vocab.get(token, 0) for token in tokenize(text)]


def encode_text(encoder: TextEncoder, table: np.ndarray, text: str):
    """Returns (vector, token_ids); mean of embedding rows, zeros if empty."""

    ids = encoder.token_ids(text)
    if not ids:
        return np.zeros(encoder.dim), ids
    return table[ids].mean(axis=0), ids


def encode_text_backward(table_grad: np.ndarray, ids: list[int], d_vec: np.ndarray) -> None:
    """Accumulate embedding-row gradients for one encoded text."""

    if not ids:
        return
    share = d_vec / len(ids)
    for idx in ids:
        table_grad[idx] += share
