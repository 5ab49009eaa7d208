"""Execute catalog-expressible queries against a telemetry store.

Semantics are the minimal ones the three dialects need: packet filtering
and groupby/aggregation for the network dialect, span selection for the
trace dialect, and metric time series selection for the resource dialect.
Execution never mutates the store, and rows come back in a deterministic
order (sorted by the leftmost column first).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dsl import Dialect, QueryAst
from .dsl.nodes import (
    AggCall,
    And,
    Assign,
    Blank,
    BoolLit,
    Compare,
    FilterCall,
    GroupbyCall,
    IntLit,
    Or,
    Select,
    Star,
    StrLit,
    TableRef,
    VarRef,
)
from .errors import ExecutionError
from .telemetry import PKT, SpanRecord, TelemetryStore

# result-table position of each packet field (switch id prepended)
_PIPE_COLS = {"switch": 0, "srcip": 1, "dstip": 2, "srcport": 3, "dstport": 4, "proto": 5, "qsize": 6, "time": 7}


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list]
    provenance: tuple[str, str | None] = field(default=("", None))

    @property
    def num_rows(self) -> int:
        return len(self.rows)


def _sorted_rows(rows: list[list]) -> list[list]:
    return sorted(rows, key=lambda row: tuple((str(type(v)), v) if isinstance(v, str) else (str(type(v)), v) for v in row))


def _packet_matrix(store: TelemetryStore) -> np.ndarray:
    """All packets with a switch-id column: (switch, src, dst, sport, dport, proto, qsize, time)."""

    parts = []
    for log in store.switches:
        n = log.packets.shape[0]
        if n == 0:
            continue
        block = np.empty((n, 8), dtype=np.float64)
        block[:, 0] = log.switch_id
        block[:, 1] = log.packets[:, PKT["src"]]
        block[:, 2] = log.packets[:, PKT["dst"]]
        block[:, 3] = log.packets[:, PKT["sport"]]
        block[:, 4] = log.packets[:, PKT["dport"]]
        block[:, 5] = log.packets[:, PKT["proto"]]
        block[:, 6] = log.packets[:, PKT["qsize"]]
        block[:, 7] = log.packets[:, PKT["time"]]
        parts.append(block)
    if not parts:
        return np.zeros((0, 8), dtype=np.float64)
    return np.vstack(parts)


def _operand_value(operand):
    if isinstance(operand, Blank):
        raise ExecutionError("query still contains blanks; fill parameters before executing")
    if isinstance(operand, (IntLit,)):
        return operand.value
    if isinstance(operand, StrLit):
        return operand.value
    if isinstance(operand, BoolLit):
        return operand.value
    raise ExecutionError(f"unsupported operand {operand!r}")


def _packet_mask(pred, matrix: np.ndarray) -> np.ndarray:
    if isinstance(pred, And):
        return _packet_mask(pred.left, matrix) & _packet_mask(pred.right, matrix)
    if isinstance(pred, Or):
        return _packet_mask(pred.left, matrix) | _packet_mask(pred.right, matrix)
    assert isinstance(pred, Compare)
    name = pred.column.name
    if name == "SWITCH_ID":
        name = "switch"
    elif name == "QUEUE_SIZE":
        name = "qsize"
    if name not in _PIPE_COLS:
        raise ExecutionError(f"unknown packet column {name!r}")
    col = matrix[:, _PIPE_COLS[name]]
    value = float(_operand_value(pred.operand))
    if pred.op == "eq":
        return col == value
    if pred.op == "gt":
        return col > value
    return col < value


def _span_matches(pred, span: SpanRecord) -> bool:
    if isinstance(pred, And):
        return _span_matches(pred.left, span) and _span_matches(pred.right, span)
    if isinstance(pred, Or):
        return _span_matches(pred.left, span) or _span_matches(pred.right, span)
    assert isinstance(pred, Compare)
    value = _operand_value(pred.operand)
    name = pred.column.name
    if name == "name":
        actual: object = span.name
    elif name == "error":
        actual = span.error
    elif name == "exceptions":
        actual = span.exception_count
    elif name == "duration":
        actual = span.duration_ms
    else:
        raise ExecutionError(f"unknown span column {name!r}")
    if pred.op == "eq":
        return actual == value
    if pred.op == "gt":
        return actual > value
    return actual < value


def execute(ast: QueryAst, store: TelemetryStore, scenario_id: str | None = None) -> ResultTable:
    """Run a query; absent subsystem identifiers yield empty results."""

    from .dsl import render_query

    provenance = (render_query(ast), scenario_id)
    if ast.dialect is Dialect.NETWORK:
        table = _execute_network(ast, store)
    elif ast.dialect is Dialect.TRACE:
        table = _execute_trace(ast, store)
    else:
        table = _execute_resource(ast, store)
    table.provenance = provenance
    return table


# network ------------------------------------------------------------------


def _execute_network(ast: QueryAst, store: TelemetryStore) -> ResultTable:
    first = ast.root.statements[0]
    if isinstance(first, Select):
        return _network_select(first, store)
    matrix = _packet_matrix(store)
    env: dict[str, np.ndarray] = {}
    result: ResultTable | None = None
    for stmt in ast.root.statements:
        if not isinstance(stmt, Assign):
            raise ExecutionError("network pipelines are sequences of assignments")
        call = stmt.value
        source = _resolve_source(call.source, matrix, env)
        if isinstance(call, FilterCall):
            mask = _packet_mask(call.predicate, source)
            env[stmt.target.name] = source[mask]
            result = _packets_table(env[stmt.target.name])
        elif isinstance(call, GroupbyCall):
            result = _groupby(source, call)
            env[stmt.target.name] = source  # groupby output is terminal; keep source for reuse
        else:
            raise ExecutionError(f"unsupported call {call!r}")
    assert result is not None
    return result


def _resolve_source(source, matrix: np.ndarray, env: dict[str, np.ndarray]) -> np.ndarray:
    if isinstance(source, TableRef):
        return matrix
    if isinstance(source, VarRef):
        if source.name not in env:
            raise ExecutionError(f"undefined stream {source.name!r}")
        return env[source.name]
    raise ExecutionError(f"bad source {source!r}")


def _packets_table(matrix: np.ndarray) -> ResultTable:
    columns = ["switch", "srcip", "dstip", "srcport", "dstport", "proto", "qsize", "time"]
    rows = [
        [int(r[0]), int(r[1]), int(r[2]), int(r[3]), int(r[4]), int(r[5]), int(r[6]), float(r[7])]
        for r in matrix
    ]
    return ResultTable(columns=columns, rows=_sorted_rows(rows))


def _groupby(matrix: np.ndarray, call: GroupbyCall) -> ResultTable:
    key_names: list[str] = []
    for key in call.keys:
        if key.name == "5-tuple":
            key_names.extend(("srcip", "dstip", "srcport", "dstport", "proto"))
        else:
            key_names.append(key.name)
    key_idx = [_PIPE_COLS[name] for name in key_names]
    agg = call.agg.name
    groups: dict[tuple, list[float]] = {}
    for row in matrix:
        key = tuple(int(row[i]) for i in key_idx)
        groups.setdefault(key, []).append(float(row[_PIPE_COLS["qsize"]]))
    rows = []
    for key, qsizes in groups.items():
        if agg == "count":
            value: object = len(qsizes)
        elif agg == "max":
            value = int(max(qsizes))
        elif agg == "min":
            value = int(min(qsizes))
        else:  # mean over queue sizes
            value = round(float(np.mean(qsizes)), 4)
        rows.append(list(key) + [value])
    return ResultTable(columns=key_names + [agg], rows=_sorted_rows(rows))


def _network_select(stmt: Select, store: TelemetryStore) -> ResultTable:
    matrix = _packet_matrix(store)
    if stmt.where is not None:
        matrix = matrix[_packet_mask(stmt.where, matrix)]
    target = stmt.target
    if isinstance(target, Star):
        return _packets_table(matrix)
    assert not isinstance(target, AggCall)
    if target.name == "QUEUE_SIZE":
        rows = [[int(r[0]), float(r[7]), int(r[6])] for r in matrix]
        return ResultTable(columns=["SWITCH_ID", "time", "QUEUE_SIZE"], rows=_sorted_rows(rows))
    if target.name == "PACKET_COUNT":
        # per-switch, per-second packet counts
        counts: dict[tuple[int, int], int] = {}
        for r in matrix:
            key = (int(r[0]), int(r[7]))
            counts[key] = counts.get(key, 0) + 1
        rows = [[sw, sec, c] for (sw, sec), c in counts.items()]
        return ResultTable(columns=["SWITCH_ID", "second", "PACKET_COUNT"], rows=_sorted_rows(rows))
    raise ExecutionError(f"unsupported network select target {target.name!r}")


# trace ----------------------------------------------------------------------


_SPAN_COLUMNS = ["name", "time", "duration", "variables", "exceptions", "error"]


def _span_row(span: SpanRecord) -> list:
    return [span.name, span.time, span.duration_ms, span.variable_count, span.exception_count, bool(span.error)]


def _execute_trace(ast: QueryAst, store: TelemetryStore) -> ResultTable:
    stmt = ast.root.statements[0]
    assert isinstance(stmt, Select)
    spans = store.spans
    if stmt.where is not None:
        spans = [s for s in spans if _span_matches(stmt.where, s)]
    target = stmt.target
    if isinstance(target, Star) or (not isinstance(target, AggCall) and target.name == "span"):
        rows = [_span_row(s) for s in spans]
        return ResultTable(columns=list(_SPAN_COLUMNS), rows=_sorted_rows(rows))
    if isinstance(target, AggCall):
        raise ExecutionError("aggregation is not supported over spans")
    picks = {
        "duration": lambda s: s.duration_ms,
        "variables": lambda s: s.variable_count,
        "exceptions": lambda s: s.exception_count,
        "name": lambda s: s.name,
    }
    if target.name not in picks:
        raise ExecutionError(f"unsupported span column {target.name!r}")
    rows = [[s.name, s.time, picks[target.name](s)] for s in spans]
    return ResultTable(columns=["name", "time", target.name], rows=_sorted_rows(rows))


# resource ---------------------------------------------------------------------


_RESOURCE_METRIC = {"cpu_usage": "cpu_util", "mem_usage": "mem_util", "disk_io": "disk_throughput"}
_SAMPLE_IDX = {"cpu_util": 1, "mem_util": 2, "disk_throughput": 3}


def _execute_resource(ast: QueryAst, store: TelemetryStore) -> ResultTable:
    stmt = ast.root.statements[0]
    assert isinstance(stmt, Select)
    metric = _RESOURCE_METRIC[stmt.table.name]
    col = _SAMPLE_IDX[metric]

    hosts = []
    for log in store.containers:
        if stmt.where is None or _host_matches(stmt.where, log.host_id):
            hosts.append(log)

    target = stmt.target
    if isinstance(target, AggCall):
        rows = []
        for log in hosts:
            if log.samples.shape[0] == 0:
                continue
            series = log.samples[:, col]
            value = {
                "max": float(np.max(series)),
                "min": float(np.min(series)),
                "mean": round(float(np.mean(series)), 6),
                "count": int(series.size),
            }[target.func.name]
            rows.append([log.host_id, value])
        label = f"{target.func.name}(value)"
        return ResultTable(columns=["host", label], rows=_sorted_rows(rows))

    rows = []
    for log in hosts:
        for sample in log.samples:
            rows.append([log.host_id, float(sample[0]), float(sample[col])])
    return ResultTable(columns=["host", "time", "value"], rows=_sorted_rows(rows))


def _host_matches(pred, host_id: str) -> bool:
    if isinstance(pred, And):
        return _host_matches(pred.left, host_id) and _host_matches(pred.right, host_id)
    if isinstance(pred, Or):
        return _host_matches(pred.left, host_id) or _host_matches(pred.right, host_id)
    assert isinstance(pred, Compare)
    if pred.column.name != "host":
        raise ExecutionError(f"unsupported resource predicate column {pred.column.name!r}")
    value = _operand_value(pred.operand)
    if pred.op == "eq":
        return host_id == value
    if pred.op == "gt":
        return host_id > str(value)
    return host_id < str(value)


def render_table(table: ResultTable, max_rows: int = 40) -> str:
    """Aligned text rendering for the CLI."""

    headers = table.columns
    shown = table.rows[:max_rows]
    cells = [[_fmt(v) for v in row] for row in shown]
    widths = [len(h) for h in headers]
    for row in cells:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    for row in cells:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    if len(table.rows) > max_rows:
        lines.append(f"... ({len(table.rows) - max_rows} more rows)")
    lines.append(f"[{len(table.rows)} rows]")
    return "\n".join(lines)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)
