"""Per-dialect name tables: which tables, columns, and functions exist.

The grammars are deliberately small. Each dialect fixes a closed set of
tables and columns; columns tagged with a blank kind are the parameter
positions that template extraction turns into blanks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .nodes import Dialect, KIND_FUNCTION, KIND_HOST, KIND_SWITCH


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    type: str                   # "int" | "str" | "bool"
    param_kind: str | None = None  # set on parameter columns only


@dataclass(frozen=True)
class TableSpec:
    name: str
    select_columns: tuple[str, ...]
    where_columns: dict[str, ColumnSpec] = field(default_factory=dict)
    agg_columns: tuple[str, ...] = ()


@dataclass(frozen=True)
class DialectSchema:
    dialect: Dialect
    tables: dict[str, TableSpec]
    # pipeline grammar (network only)
    filter_columns: dict[str, ColumnSpec] = field(default_factory=dict)
    groupby_keys: tuple[str, ...] = ()
    agg_functions: tuple[str, ...] = ()

    def table(self, name: str) -> TableSpec | None:
        return self.tables.get(name.lower()) or self.tables.get(name)


FIVE_TUPLE = "5-tuple"
FIVE_TUPLE_FIELDS = ("srcip", "dstip", "srcport", "dstport", "proto")

AGG_FUNCTIONS = ("count", "max", "mean", "min")

NETWORK_SCHEMA = DialectSchema(
    dialect=Dialect.NETWORK,
    tables={
        "T": TableSpec(
            name="T",
            select_columns=("QUEUE_SIZE", "PACKET_COUNT"),
            where_columns={
                "SWITCH_ID": ColumnSpec("SWITCH_ID", "int", KIND_SWITCH),
                "QUEUE_SIZE": ColumnSpec("QUEUE_SIZE", "int"),
            },
        ),
    },
    filter_columns={
        "switch": ColumnSpec("switch", "int", KIND_SWITCH),
        "qsize": ColumnSpec("qsize", "int"),
        "srcip": ColumnSpec("srcip", "int"),
        "dstip": ColumnSpec("dstip", "int"),
        "srcport": ColumnSpec("srcport", "int"),
        "dstport": ColumnSpec("dstport", "int"),
        "proto": ColumnSpec("proto", "int"),
    },
    groupby_keys=(FIVE_TUPLE,) + FIVE_TUPLE_FIELDS + ("switch",),
    agg_functions=AGG_FUNCTIONS,
)

TRACE_SCHEMA = DialectSchema(
    dialect=Dialect.TRACE,
    tables={
        "spans": TableSpec(
            name="spans",
            select_columns=("span", "duration", "variables", "exceptions", "name"),
            where_columns={
                "name": ColumnSpec("name", "str", KIND_FUNCTION),
                "error": ColumnSpec("error", "bool"),
                "exceptions": ColumnSpec("exceptions", "int"),
                "duration": ColumnSpec("duration", "int"),
            },
        ),
    },
)

_RESOURCE_TABLE_NAMES = ("cpu_usage", "mem_usage", "disk_io")

RESOURCE_SCHEMA = DialectSchema(
    dialect=Dialect.RESOURCE,
    tables={
        name: TableSpec(
            name=name,
            select_columns=("value", "time", "host"),
            where_columns={"host": ColumnSpec("host", "str", KIND_HOST)},
            agg_columns=("value",),
        )
        for name in _RESOURCE_TABLE_NAMES
    },
)

SCHEMAS: dict[Dialect, DialectSchema] = {
    Dialect.NETWORK: NETWORK_SCHEMA,
    Dialect.TRACE: TRACE_SCHEMA,
    Dialect.RESOURCE: RESOURCE_SCHEMA,
}


def schema_for(dialect: Dialect) -> DialectSchema:
    return SCHEMAS[dialect]


def lookup_canonical(name: str, candidates) -> str | None:
    """Case-insensitive match of ``name`` against canonical names."""

    lowered = name.lower()
    for cand in candidates:
        if cand.lower() == lowered:
            return cand
    return None
