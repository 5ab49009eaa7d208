"""Convert template trees into featurized graphs for the graph encoder.

Nodes are visited in preorder (root first). Each node gets a fixed-width
feature vector: a one-hot over the operator vocabulary (structural
operators plus the closed sets of column/table/function names), a blank
flag, and a literal-type bucket. The identity of non-parameter literal
VALUES is deliberately erased so that all fills of a template share one
graph; an optional hashed identity bucket can be enabled for models that
score fully-formed queries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nodes import (
    AggCall,
    And,
    Assign,
    Blank,
    BoolLit,
    Column,
    Compare,
    FilterCall,
    FuncName,
    GroupbyCall,
    IntLit,
    Or,
    Program,
    QueryTemplate,
    Select,
    Star,
    StrLit,
    TableRef,
    VarRef,
    children,
)
from . import grammar

_STRUCT_OPS = (
    "program",
    "assign",
    "filter",
    "groupby",
    "select",
    "and",
    "or",
    "cmp_eq",
    "cmp_gt",
    "cmp_lt",
    "agg",
    "star",
    "var",
    "literal",
    "blank",
)


def _name_ops() -> tuple[str, ...]:
    columns: set[str] = set()
    tables: set[str] = set()
    for schema in grammar.SCHEMAS.values():
        for table in schema.tables.values():
            tables.add(table.name)
            columns.update(table.select_columns)
            columns.update(table.where_columns)
            columns.update(table.agg_columns)
        columns.update(schema.filter_columns)
        columns.update(schema.groupby_keys)
    ops = [f"col:{c}" for c in sorted(columns)]
    ops += [f"table:{t}" for t in sorted(tables)]
    ops += [f"fn:{f}" for f in grammar.AGG_FUNCTIONS]
    return tuple(ops)


OP_VOCAB: tuple[str, ...] = _STRUCT_OPS + _name_ops()
_OP_INDEX = {op: i for i, op in enumerate(OP_VOCAB)}

_BUCKETS = ("str", "int", "bool")

#: width of a node feature vector without identity buckets
FEATURE_WIDTH = len(OP_VOCAB) + 1 + len(_BUCKETS)


@dataclass(frozen=True)
class AstGraph:
    """Featurized tree: undirected parent-child edges over preorder nodes."""

    node_features: np.ndarray          # (n_nodes, feature_width)
    edges: tuple[tuple[int, int], ...]  # (parent, child) pairs
    root_index: int
    blank_indices: dict[int, int]       # blank number (1-based) -> node index

    @property
    def num_nodes(self) -> int:
        return self.node_features.shape[0]


def _op_of(node) -> str:
    if isinstance(node, Program):
        return "program"
    if isinstance(node, Assign):
        return "assign"
    if isinstance(node, FilterCall):
        return "filter"
    if isinstance(node, GroupbyCall):
        return "groupby"
    if isinstance(node, Select):
        return "select"
    if isinstance(node, And):
        return "and"
    if isinstance(node, Or):
        return "or"
    if isinstance(node, Compare):
        return f"cmp_{node.op}"
    if isinstance(node, AggCall):
        return "agg"
    if isinstance(node, Star):
        return "star"
    if isinstance(node, VarRef):
        return "var"
    if isinstance(node, Column):
        return f"col:{node.name}"
    if isinstance(node, TableRef):
        return f"table:{node.name}"
    if isinstance(node, FuncName):
        return f"fn:{node.name}"
    if isinstance(node, Blank):
        return "blank"
    if isinstance(node, (StrLit, IntLit, BoolLit)):
        return "literal"
    raise TypeError(f"unknown AST node {node!r}")


def _bucket_of(node) -> str | None:
    if isinstance(node, StrLit):
        return "str"
    if isinstance(node, IntLit):
        return "int"
    if isinstance(node, BoolLit):
        return "bool"
    return None


def ast_to_graph(template: QueryTemplate, identity_buckets: int = 0) -> AstGraph:
    """Build the graph for a template (or for a filled query's tree).

    ``identity_buckets`` > 0 appends a hashed one-hot of each literal's
    value, used only by the joint query-scoring baseline.
    """

    nodes: list = []
    edges: list[tuple[int, int]] = []

    def visit(node, parent: int | None) -> None:
        idx = len(nodes)
        nodes.append(node)
        if parent is not None:
            edges.append((parent, idx))
        for child in children(node):
            visit(child, idx)

    visit(template.root, None)

    width = FEATURE_WIDTH + identity_buckets
    features = np.zeros((len(nodes), width), dtype=np.float64)
    blank_indices: dict[int, int] = {}
    for idx, node in enumerate(nodes):
        features[idx, _OP_INDEX[_op_of(node)]] = 1.0
        if isinstance(node, Blank):
            features[idx, len(OP_VOCAB)] = 1.0
            blank_indices[node.index] = idx
        bucket = _bucket_of(node)
        if bucket is not None:
            features[idx, len(OP_VOCAB) + 1 + _BUCKETS.index(bucket)] = 1.0
            if identity_buckets:
                value = node.value
                slot = _stable_hash(str(value)) % identity_buckets
                features[idx, FEATURE_WIDTH + slot] = 1.0

    return AstGraph(
        node_features=features,
        edges=tuple(edges),
        root_index=0,
        blank_indices=blank_indices,
    )


def _stable_hash(text: str) -> int:
    # deterministic across processes, unlike hash()
    h = 2166136261
    for ch in text.encode("utf-8"):
        h = (h ^ ch) * 16777619 % (1 << 32)
    return h
