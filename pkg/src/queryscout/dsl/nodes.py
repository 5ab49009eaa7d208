"""Typed syntax trees for the three debugging-query dialects.

All nodes are immutable; two queries are equal iff their trees are equal.
A template is an ordinary tree in which parameter literals have been
replaced by :class:`Blank` nodes with dense 1-based indices.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union


class Dialect(enum.Enum):
    """One query language per instrumented subsystem family."""

    NETWORK = "network"    # switch telemetry (filter/groupby pipelines, switch counters)
    TRACE = "trace"        # function spans from distributed tracing
    RESOURCE = "resource"  # per-container resource utilization

    @property
    def subsystem_kind(self) -> str:
        return _DIALECT_KIND[self]


_DIALECT_KIND = {
    Dialect.NETWORK: "switch",
    Dialect.TRACE: "function",
    Dialect.RESOURCE: "container",
}

# Blank kinds: the identifier family a blank accepts.
KIND_SWITCH = "switch_id"
KIND_FUNCTION = "function_name"
KIND_HOST = "host_id"

BLANK_KINDS = (KIND_SWITCH, KIND_FUNCTION, KIND_HOST)

KIND_FOR_SUBSYSTEM = {"switch": KIND_SWITCH, "function": KIND_FUNCTION, "container": KIND_HOST}
SUBSYSTEM_FOR_KIND = {v: k for k, v in KIND_FOR_SUBSYSTEM.items()}


@dataclass(frozen=True)
class Column:
    name: str


@dataclass(frozen=True)
class TableRef:
    name: str


@dataclass(frozen=True)
class VarRef:
    """A named intermediate stream in a pipeline query."""

    name: str


@dataclass(frozen=True)
class FuncName:
    """An aggregation function name (count, max, ...)."""

    name: str


@dataclass(frozen=True)
class Star:
    pass


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Blank:
    """Unfilled parameter slot. Indices are dense 1..z in render order."""

    index: int
    kind: str


Literal = Union[StrLit, IntLit, BoolLit]
Operand = Union[StrLit, IntLit, BoolLit, Blank]


@dataclass(frozen=True)
class Compare:
    """column <op> operand, with op in {eq, gt, lt}."""

    op: str
    column: Column
    operand: Operand


@dataclass(frozen=True)
class And:
    left: "Predicate"
    right: "Predicate"


@dataclass(frozen=True)
class Or:
    left: "Predicate"
    right: "Predicate"


Predicate = Union[Compare, And, Or]


@dataclass(frozen=True)
class AggCall:
    func: FuncName
    arg: Column


@dataclass(frozen=True)
class Select:
    """SELECT <target> FROM <table> [WHERE <predicate>]."""

    target: Union[Column, Star, AggCall]
    table: TableRef
    where: Predicate | None


@dataclass(frozen=True)
class FilterCall:
    """filter(<source>, <predicate>)."""

    source: Union[TableRef, VarRef]
    predicate: Predicate


@dataclass(frozen=True)
class GroupbyCall:
    """groupby(<source>, [keys], <agg>)."""

    source: Union[TableRef, VarRef]
    keys: tuple[Column, ...]
    agg: FuncName


@dataclass(frozen=True)
class Assign:
    target: VarRef
    value: Union[FilterCall, GroupbyCall]


Statement = Union[Select, Assign]


@dataclass(frozen=True)
class Program:
    """Root node: one SELECT statement, or a pipeline of assignments."""

    statements: tuple[Statement, ...]


@dataclass(frozen=True)
class QueryAst:
    dialect: Dialect
    root: Program


@dataclass(frozen=True)
class QueryTemplate:
    """A query whose parameter literals are blanks.

    ``blank_kinds[i-1]`` is the identifier kind accepted by blank i.
    """

    dialect: Dialect
    root: Program
    blank_kinds: tuple[str, ...]

    @property
    def num_blanks(self) -> int:
        return len(self.blank_kinds)


@dataclass(frozen=True)
class ParamAssignment:
    """Values aligned with a template's blanks (ints for switches, else strings)."""

    values: tuple[Union[int, str], ...]


def walk(node) -> list:
    """Preorder traversal of every AST node reachable from ``node``."""

    out = [node]
    for child in children(node):
        out.extend(walk(child))
    return out


def children(node) -> tuple:
    """Direct children of an AST node in left-to-right source order."""

    if isinstance(node, Program):
        return node.statements
    if isinstance(node, Select):
        extra = (node.where,) if node.where is not None else ()
        return (node.target, node.table) + extra
    if isinstance(node, Assign):
        return (node.target, node.value)
    if isinstance(node, FilterCall):
        return (node.source, node.predicate)
    if isinstance(node, GroupbyCall):
        return (node.source,) + node.keys + (node.agg,)
    if isinstance(node, (And, Or)):
        return (node.left, node.right)
    if isinstance(node, Compare):
        return (node.column, node.operand)
    if isinstance(node, AggCall):
        return (node.func, node.arg)
    return ()
