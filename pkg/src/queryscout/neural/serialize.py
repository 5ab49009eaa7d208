"""Versioned binary container for named tensors plus JSON metadata.

Layout (documented for external readers):
    bytes 0..3   magic ``QSB1``
    bytes 4..7   header length, little-endian uint32
    header       UTF-8 JSON: {"version": 1, "meta": {...},
                  "tensors": [[name, [dim, ...]], ...]}
    data         tensors concatenated in header order, each row-major
                 little-endian float64
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ModelError

MAGIC = b"QSB1"
VERSION = 1


def save_tensors(path: str | Path, tensors: dict[str, np.ndarray], meta: dict) -> None:
    names = sorted(tensors)
    header = {
        "version": VERSION,
        "meta": meta,
        "tensors": [[name, list(tensors[name].shape)] for name in names],
    }
    header_bytes = json.dumps(header, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(header_bytes).to_bytes(4, "little"))
        fh.write(header_bytes)
        for name in names:
            fh.write(np.ascontiguousarray(tensors[name], dtype="<f8").tobytes())


def load_tensors(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ModelError(f"{path}: not a model bundle (bad magic)")
    header_len = int.from_bytes(raw[4:8], "little")
    header = json.loads(raw[8 : 8 + header_len].decode("utf-8"))
    if header.get("version") != VERSION:
        raise ModelError(f"{path}: unsupported bundle version {header.get('version')}")
    tensors: dict[str, np.ndarray] = {}
    offset = 8 + header_len
    for name, shape in header["tensors"]:
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * 8
        array = np.frombuffer(raw[offset:end], dtype="<f8").reshape(shape).astype(np.float64)
        tensors[name] = array.copy()
        offset = end
    if offset != len(raw):
        raise ModelError(f"{path}: trailing bytes after tensor data")
    return tensors, header["meta"]
