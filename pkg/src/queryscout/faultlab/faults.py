"""Fault taxonomy and injection.

Seven recurring root-cause categories, each with a location (the faulty
subsystem), a category-specific magnitude knob, and a seed. Injection
produces a world object that the simulator interprets; it does not touch
telemetry directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..errors import FaultError
from .topology import ROUTER_ID, Topology

RESOURCE_UNDERPROVISIONING = "resource_underprovisioning"
COMPONENT_FAILURE = "component_failure"
SUBSYSTEM_MISCONFIGURATION = "subsystem_misconfiguration"
NETWORK_CONGESTION = "network_congestion"
NETWORK_MISCONFIGURATION = "network_misconfiguration"
SOURCE_CODE_BUG = "source_code_bug"
INCORRECT_DATA_EXCHANGE = "incorrect_data_exchange"

CATEGORIES = (
    RESOURCE_UNDERPROVISIONING,
    COMPONENT_FAILURE,
    SUBSYSTEM_MISCONFIGURATION,
    NETWORK_CONGESTION,
    NETWORK_MISCONFIGURATION,
    SOURCE_CODE_BUG,
    INCORRECT_DATA_EXCHANGE,
)

# production ticket counts per category, used as the default fault mix
TICKET_MIX = {
    RESOURCE_UNDERPROVISIONING: 17,
    COMPONENT_FAILURE: 58,
    SUBSYSTEM_MISCONFIGURATION: 11,
    NETWORK_CONGESTION: 5,
    NETWORK_MISCONFIGURATION: 18,
    SOURCE_CODE_BUG: 31,
    INCORRECT_DATA_EXCHANGE: 26,
}

# what the location field names, per category
LOCATION_KIND = {
    RESOURCE_UNDERPROVISIONING: "service",
    COMPONENT_FAILURE: "service",
    SUBSYSTEM_MISCONFIGURATION: "service",
    NETWORK_CONGESTION: "switch",
    NETWORK_MISCONFIGURATION: "switch",
    SOURCE_CODE_BUG: "function",
    INCORRECT_DATA_EXCHANGE: "function",
}

RESOURCES = ("cpu", "mem", "disk")


@dataclass(frozen=True)
class FaultSpec:
    """One injected fault.

    ``magnitude`` is a category-specific knob: a severity float for most
    categories; resource underprovisioning uses a mapping with keys
    ``resource`` (cpu|mem|disk) and ``severity``.
    """

    category: str
    location: int | str
    magnitude: Any = 1.0
    seed: int = 0

    @property
    def severity(self) -> float:
        if isinstance(self.magnitude, dict):
            return float(self.magnitude.get("severity", 1.0))
        return float(self.magnitude)

    @property
    def resource(self) -> str | None:
        if isinstance(self.magnitude, dict):
            return self.magnitude.get("resource")
        return None


@dataclass(frozen=True)
class FaultyWorld:
    """Topology plus the active fault (None for a healthy baseline run)."""

    topology: Topology
    fault: FaultSpec | None = None


def validate_fault(topology: Topology, fault: FaultSpec) -> None:
    if fault.category not in CATEGORIES:
        raise FaultError(f"unknown fault category {fault.category!r}")
    kind = LOCATION_KIND[fault.category]
    if kind == "service":
        names = {svc.name for svc in topology.services}
        if fault.location not in names:
            raise FaultError(f"{fault.category} needs a service location, got {fault.location!r}")
        if fault.category == RESOURCE_UNDERPROVISIONING:
            if fault.resource not in RESOURCES:
                raise FaultError(
                    f"resource underprovisioning needs magnitude.resource in {RESOURCES}, got {fault.resource!r}"
                )
    elif kind == "switch":
        if not isinstance(fault.location, int) or fault.location not in topology.switch_ids():
            raise FaultError(f"{fault.category} needs a switch id location, got {fault.location!r}")
        if fault.location == ROUTER_ID:
            raise FaultError("faults are injected on service-path switches, not the router")
    elif kind == "function":
        if fault.location not in topology.function_names():
            raise FaultError(f"{fault.category} needs a function location, got {fault.location!r}")


def inject_fault(topology: Topology, fault: FaultSpec | None) -> FaultyWorld:
    """Validate the fault against the topology and freeze it into a world."""

    if fault is not None:
        validate_fault(topology, fault)
    return FaultyWorld(topology=topology, fault=fault)


def fault_to_json(fault: FaultSpec) -> dict:
    return {
        "category": fault.category,
        "location": fault.location,
        "magnitude": fault.magnitude,
        "seed": fault.seed,
    }


def fault_from_json(obj: dict) -> FaultSpec:
    return FaultSpec(
        category=obj["category"],
        location=obj["location"],
        magnitude=obj.get("magnitude", 1.0),
        seed=int(obj.get("seed", 0)),
    )
