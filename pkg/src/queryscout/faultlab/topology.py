"""Star-topology application model.

One central router (switch 0); every service host hangs off the router
behind a pair of switches: host -> edge switch -> core switch -> router.
Service 0 is the user-facing frontend that fans out to backends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

ROUTER_ID = 0

_VERBS = ("load", "find", "fetch", "resolve", "merge", "score", "sync", "index")


@dataclass(frozen=True)
class Service:
    name: str
    index: int
    container_id: str
    host_id: str
    functions: tuple[str, ...]

    @property
    def edge_switch(self) -> int:
        """Switch attached to the service host."""

        return 2 * self.index + 1

    @property
    def core_switch(self) -> int:
        """Switch attached to the router."""

        return 2 * self.index + 2

    @property
    def entry_function(self) -> str:
        return self.functions[0]


@dataclass(frozen=True)
class Link:
    a: str
    b: str
    latency_ms: float
    capacity_mbps: float


@dataclass(frozen=True)
class AppSpec:
    name: str
    services: tuple[str, ...]
    functions_per_service: int = 3
    fanout: int = 3  # max backend services touched per request


@dataclass(frozen=True)
class Topology:
    app: str
    services: tuple[Service, ...]
    links: tuple[Link, ...]

    @property
    def frontend(self) -> Service:
        return self.services[0]

    def switch_ids(self) -> list[int]:
        ids = [ROUTER_ID]
        for svc in self.services:
            ids.extend((svc.edge_switch, svc.core_switch))
        return ids

    def host_ids(self) -> list[str]:
        return [svc.host_id for svc in self.services]

    def function_names(self) -> list[str]:
        names: list[str] = []
        for svc in self.services:
            names.extend(svc.functions)
        return names

    def service_by_name(self, name: str) -> Service:
        for svc in self.services:
            if svc.name == name:
                return svc
        raise KeyError(name)

    def service_for_host(self, host_id: str) -> Service:
        for svc in self.services:
            if svc.host_id == host_id:
                return svc
        raise KeyError(host_id)

    def service_for_switch(self, switch_id: int) -> Service | None:
        if switch_id == ROUTER_ID:
            return None
        return self.services[(switch_id - 1) // 2]

    def service_for_function(self, function_name: str) -> Service:
        for svc in self.services:
            if function_name in svc.functions:
                return svc
        raise KeyError(function_name)


DEFAULT_SERVICES = (
    "frontend",
    "catalog",
    "cart",
    "orders",
    "payment",
    "shipping",
    "user",
    "search",
    "reviews",
    "inventory",
    "notify",
    "auth",
    "media",
    "analytics",
)


def default_app_spec(n_services: int = 14) -> AppSpec:
    if n_services < 2:
        raise ConfigError("an application needs at least 2 services")
    if n_services <= len(DEFAULT_SERVICES):
        names = DEFAULT_SERVICES[:n_services]
    else:
        names = DEFAULT_SERVICES + tuple(f"svc{i}" for i in range(len(DEFAULT_SERVICES), n_services))
    return AppSpec(name=f"shopnet{n_services}", services=names)


def build_topology(spec: AppSpec, seed: int) -> Topology:
    """Deterministic topology for (spec, seed); seed jitters link parameters
    and picks internal function-name verbs."""

    if len(spec.services) < 2:
        raise ConfigError("an application needs at least 2 services")
    if len(set(spec.services)) != len(spec.services):
        raise ConfigError("service names must be unique")
    rng = np.random.default_rng(seed)
    services: list[Service] = []
    for i, name in enumerate(spec.services):
        funcs = [f"GET_{name}"]
        for k in range(spec.functions_per_service - 1):
            verb = _VERBS[int(rng.integers(0, len(_VERBS)))]
            funcs.append(f"_{verb}_{name}_{k}")
        services.append(
            Service(
                name=name,
                index=i,
                container_id=f"c_{name}",
                host_id=f"mn.h{i + 1}",
                functions=tuple(funcs),
            )
        )
    links: list[Link] = []
    for svc in services:
        base = float(rng.uniform(0.1, 0.4))
        links.append(Link(svc.host_id, f"s{svc.edge_switch}", base, 1000.0))
        links.append(Link(f"s{svc.edge_switch}", f"s{svc.core_switch}", base, 1000.0))
        links.append(Link(f"s{svc.core_switch}", f"s{ROUTER_ID}", base, 1000.0))
    return Topology(app=spec.name, services=tuple(services), links=tuple(links))
