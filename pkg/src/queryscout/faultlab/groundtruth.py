"""Canonical query templates and the fault -> ground-truth-query mapping.

The bank holds roughly one template per (fault category, tool) vantage
point; only the primary vantage per category is used as ground truth, the
rest are realistic distractors for the ranked list. Template text uses
``_`` for blanks.
"""

from __future__ import annotations

from ..dsl import (
    Dialect,
    ParamAssignment,
    QueryAst,
    QueryTemplate,
    fill_blanks,
    parse_query,
    template_from_ast,
)
from ..errors import FaultError
from .faults import (
    COMPONENT_FAILURE,
    INCORRECT_DATA_EXCHANGE,
    NETWORK_CONGESTION,
    NETWORK_MISCONFIGURATION,
    RESOURCE_UNDERPROVISIONING,
    SOURCE_CODE_BUG,
    SUBSYSTEM_MISCONFIGURATION,
    FaultSpec,
    validate_fault,
)
from .topology import Topology

# (name, dialect, template text)
TEMPLATE_BANK: tuple[tuple[str, Dialect, str], ...] = (
    ("net_flow_count", Dialect.NETWORK, "stream = filter(T, switch==_); result = groupby(stream, [5-tuple], count);"),
    ("net_queue", Dialect.NETWORK, "SELECT QUEUE_SIZE FROM T WHERE SWITCH_ID=_"),
    ("net_packets", Dialect.NETWORK, "SELECT PACKET_COUNT FROM T WHERE SWITCH_ID=_"),
    ("net_host_pairs", Dialect.NETWORK, "stream = filter(T, switch==_); result = groupby(stream, [srcip, dstip], count);"),
    ("net_queue_pair", Dialect.NETWORK, "SELECT QUEUE_SIZE FROM T WHERE SWITCH_ID=_ OR SWITCH_ID=_"),
    ("trace_name", Dialect.TRACE, "SELECT span FROM spans WHERE name=_"),
    ("trace_errors", Dialect.TRACE, "SELECT span FROM spans WHERE name=_ AND error=true"),
    ("trace_exceptions", Dialect.TRACE, "SELECT span FROM spans WHERE name=_ AND exceptions>0"),
    ("trace_duration", Dialect.TRACE, "SELECT duration FROM spans WHERE name=_"),
    ("trace_variables", Dialect.TRACE, "SELECT variables FROM spans WHERE name=_"),
    ("trace_slow", Dialect.TRACE, "SELECT span FROM spans WHERE name=_ AND duration>1000"),
    ("trace_all_errors", Dialect.TRACE, "SELECT span FROM spans WHERE error=true"),
    ("trace_all_exceptions", Dialect.TRACE, "SELECT span FROM spans WHERE exceptions>0"),
    ("res_cpu", Dialect.RESOURCE, 'SELECT * FROM cpu_usage WHERE host=_'),
    ("res_mem", Dialect.RESOURCE, 'SELECT * FROM mem_usage WHERE host=_'),
    ("res_disk", Dialect.RESOURCE, 'SELECT * FROM disk_io WHERE host=_'),
    ("res_cpu_peak", Dialect.RESOURCE, 'SELECT max(value) FROM cpu_usage WHERE host=_'),
    ("res_disk_peak", Dialect.RESOURCE, 'SELECT max(value) FROM disk_io WHERE host=_'),
)


def canonical_templates() -> list[QueryTemplate]:
    """The fixed template bank, parsed, in stable order."""

    out = []
    for _, dialect, text in TEMPLATE_BANK:
        out.append(template_from_ast(parse_query(text, dialect)))
    return out


def template_by_name(name: str) -> QueryTemplate:
    for bank_name, dialect, text in TEMPLATE_BANK:
        if bank_name == name:
            return template_from_ast(parse_query(text, dialect))
    raise KeyError(name)


# primary vantage per fault category
_GT_TEMPLATE = {
    COMPONENT_FAILURE: "net_flow_count",
    NETWORK_MISCONFIGURATION: "net_flow_count",
    NETWORK_CONGESTION: "net_queue",
    SOURCE_CODE_BUG: "trace_name",
    SUBSYSTEM_MISCONFIGURATION: "trace_errors",
    INCORRECT_DATA_EXCHANGE: "trace_exceptions",
}

_RESOURCE_TEMPLATE = {"cpu": "res_cpu", "mem": "res_mem", "disk": "res_disk"}


def ground_truth_query(fault: FaultSpec, topology: Topology) -> QueryAst:
    """Deterministic category -> template mapping, parameterized by the
    fault location's identifiers."""

    validate_fault(topology, fault)
    if fault.category == RESOURCE_UNDERPROVISIONING:
        template = template_by_name(_RESOURCE_TEMPLATE[fault.resource])
        svc = topology.service_by_name(fault.location)
        return fill_blanks(template, ParamAssignment((svc.host_id,)))
    template = template_by_name(_GT_TEMPLATE[fault.category])
    if fault.category == COMPONENT_FAILURE:
        svc = topology.service_by_name(fault.location)
        return fill_blanks(template, ParamAssignment((svc.edge_switch,)))
    if fault.category == NETWORK_MISCONFIGURATION or fault.category == NETWORK_CONGESTION:
        return fill_blanks(template, ParamAssignment((int(fault.location),)))
    if fault.category == SUBSYSTEM_MISCONFIGURATION:
        svc = topology.service_by_name(fault.location)
        return fill_blanks(template, ParamAssignment((svc.entry_function,)))
    if fault.category in (SOURCE_CODE_BUG, INCORRECT_DATA_EXCHANGE):
        return fill_blanks(template, ParamAssignment((str(fault.location),)))
    raise FaultError(f"no ground-truth mapping for category {fault.category!r}")
