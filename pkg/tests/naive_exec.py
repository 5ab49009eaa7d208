"""Naive full-scan reference interpreter for query execution.

Shares no code with the engine; used as the independent oracle by the
executor tests and the acceptance suite.
"""

import numpy as np

from queryscout.dsl import Dialect
from queryscout.dsl.nodes import AggCall, And, Assign, Compare, FilterCall, GroupbyCall, Or, Select, Star
from queryscout.telemetry import PKT

def _pkt_dicts(store):
    out = []
    for log in store.switches:
        for row in log.packets:
            out.append(
                {
                    "switch": int(log.switch_id),
                    "time": float(row[PKT["time"]]),
                    "srcip": int(row[PKT["src"]]),
                    "dstip": int(row[PKT["dst"]]),
                    "srcport": int(row[PKT["sport"]]),
                    "dstport": int(row[PKT["dport"]]),
                    "proto": int(row[PKT["proto"]]),
                    "qsize": int(row[PKT["qsize"]]),
                }
            )
    return out


def _eval_pred(pred, record):
    if isinstance(pred, And):
        return _eval_pred(pred.left, record) and _eval_pred(pred.right, record)
    if isinstance(pred, Or):
        return _eval_pred(pred.left, record) or _eval_pred(pred.right, record)
    assert isinstance(pred, Compare)
    name = {"SWITCH_ID": "switch", "QUEUE_SIZE": "qsize"}.get(pred.column.name, pred.column.name)
    actual = record[name]
    value = pred.operand.value
    if pred.op == "eq":
        return actual == value
    if pred.op == "gt":
        return actual > value
    return actual < value


def reference_execute(ast, store):
    """Naive full-scan interpreter; returns a multiset of row tuples."""

    stmt = ast.root.statements[0]
    if ast.dialect is Dialect.NETWORK and isinstance(stmt, Select):
        packets = [p for p in _pkt_dicts(store) if stmt.where is None or _eval_pred(stmt.where, p)]
        if isinstance(stmt.target, Star):
            return sorted(
                (p["switch"], p["srcip"], p["dstip"], p["srcport"], p["dstport"], p["proto"], p["qsize"], p["time"])
                for p in packets
            )
        if stmt.target.name == "QUEUE_SIZE":
            return sorted((p["switch"], p["time"], p["qsize"]) for p in packets)
        counts = {}
        for p in packets:
            key = (p["switch"], int(p["time"]))
            counts[key] = counts.get(key, 0) + 1
        return sorted((sw, sec, n) for (sw, sec), n in counts.items())
    if ast.dialect is Dialect.NETWORK:
        env = {}
        result = None
        for statement in ast.root.statements:
            assert isinstance(statement, Assign)
            call = statement.value
            source = _pkt_dicts(store) if getattr(call.source, "name", "") == "T" else env[call.source.name]
            if isinstance(call, FilterCall):
                rows = [p for p in source if _eval_pred(call.predicate, p)]
                env[statement.target.name] = rows
                result = sorted(
                    (p["switch"], p["srcip"], p["dstip"], p["srcport"], p["dstport"], p["proto"], p["qsize"], p["time"])
                    for p in rows
                )
            else:
                assert isinstance(call, GroupbyCall)
                keys = []
                for k in call.keys:
                    keys.extend(("srcip", "dstip", "srcport", "dstport", "proto") if k.name == "5-tuple" else [k.name])
                groups = {}
                for p in source:
                    groups.setdefault(tuple(p[k] for k in keys), []).append(p["qsize"])
                rows = []
                for key, qs in groups.items():
                    if call.agg.name == "count":
                        value = len(qs)
                    elif call.agg.name == "max":
                        value = max(qs)
                    elif call.agg.name == "min":
                        value = min(qs)
                    else:
                        value = round(float(np.mean(qs)), 4)
                    rows.append(key + (value,))
                env[statement.target.name] = source
                result = sorted(rows)
        return result
    if ast.dialect is Dialect.TRACE:
        spans = [s for s in store.spans if stmt.where is None or _eval_pred(stmt.where, _span_dict(s))]
        target = stmt.target
        if isinstance(target, Star) or target.name == "span":
            return sorted((s.name, s.time, s.duration_ms, s.variable_count, s.exception_count, bool(s.error)) for s in spans)
        pick = {
            "duration": lambda s: s.duration_ms,
            "variables": lambda s: s.variable_count,
            "exceptions": lambda s: s.exception_count,
            "name": lambda s: s.name,
        }[target.name]
        return sorted((s.name, s.time, pick(s)) for s in spans)
    # resource
    metric_col = {"cpu_usage": 1, "mem_usage": 2, "disk_io": 3}[stmt.table.name]
    logs = [
        c
        for c in store.containers
        if stmt.where is None or _eval_pred(stmt.where, {"host": c.host_id})
    ]
    if isinstance(stmt.target, AggCall):
        rows = []
        for c in logs:
            if c.samples.shape[0] == 0:
                continue
            series = [float(r[metric_col]) for r in c.samples]
            value = {
                "max": max(series),
                "min": min(series),
                "mean": round(float(np.mean(series)), 6),
                "count": len(series),
            }[stmt.target.func.name]
            rows.append((c.host_id, value))
        return sorted(rows)
    return sorted((c.host_id, float(r[0]), float(r[metric_col])) for c in logs for r in c.samples)


def _span_dict(s):
    return {"name": s.name, "error": s.error, "exceptions": s.exception_count, "duration": s.duration_ms}


def rows_match(table, reference):
    return sorted(tuple(r) for r in table.rows) == list(reference)


