"""Distribution-based telemetry simulator.

Generates per-subsystem series whose *summary statistics* carry the fault
signatures; no packet-level network emulation. Every draw comes from one
seeded generator in a fixed order, so a (world, workload, seed) triple
always produces the identical store, and values are rounded before they
enter the store so that serialization round-trips exactly.

Fault signatures:
  component failure      -> zero packets on the service's edge switch, dead
                            container, absent spans, caller errors
  network misconfig      -> packets through the target switch drop to ~6%
  network congestion     -> inflated queue depths (and cross traffic) at the
                            target switch, slower service behind it
  cpu/mem/disk underprov -> the container's metric pins at its ceiling and
                            the service's functions slow down
  source-code bug        -> the function reads almost no variables, runs
                            short, and stops calling a sibling
  data-exchange fault    -> the receiving function throws exceptions
  subsystem misconfig    -> the service's entry function errors with
                            exceptions and its leg traffic halves
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..telemetry import (
    ContainerLog,
    SpanRecord,
    SwitchLog,
    TelemetryStore,
    empty_packets,
    empty_samples,
)
from ..util import stable_hash
from .faults import (
    COMPONENT_FAILURE,
    INCORRECT_DATA_EXCHANGE,
    NETWORK_CONGESTION,
    NETWORK_MISCONFIGURATION,
    RESOURCE_UNDERPROVISIONING,
    SOURCE_CODE_BUG,
    SUBSYSTEM_MISCONFIGURATION,
    FaultyWorld,
)
from .topology import ROUTER_ID, Service, Topology


@dataclass(frozen=True)
class Workload:
    rate_per_s: float = 1.0
    duration_s: float = 40.0
    benign_anomaly_rate: float = 0.35


_BENIGN_KINDS = ("queue_blip", "cpu_blip", "exc_blip", "pkt_dip")


def _base_duration_ms(fn: str) -> float:
    return 20.0 + (stable_hash(fn) % 61)


def _base_variables(fn: str) -> int:
    return 4 + (stable_hash(fn) % 6)


def _base_cpu(svc: Service) -> float:
    return 0.12 + (stable_hash(svc.name) % 10) / 100.0


def _base_mem(svc: Service) -> float:
    return 0.28 + (stable_hash(svc.name) % 20) / 100.0


class _Sim:
    def __init__(self, world: FaultyWorld, workload: Workload, seed: int):
        self.topo: Topology = world.topology
        self.fault = world.fault
        self.work = workload
        self.rng = np.random.default_rng(seed)
        self.packets: dict[int, list[list[float]]] = {sid: [] for sid in self.topo.switch_ids()}
        self.spans: list[SpanRecord] = []
        self.hits: dict[str, int] = {svc.name: 0 for svc in self.topo.services}
        self.benign: tuple[str, object] | None = None

    # fault predicates ---------------------------------------------------

    def _fault_is(self, category: str) -> bool:
        return self.fault is not None and self.fault.category == category

    def _failed_service(self) -> Service | None:
        if self._fault_is(COMPONENT_FAILURE):
            return self.topo.service_by_name(self.fault.location)
        return None

    def _misconfigured_service(self) -> Service | None:
        if self._fault_is(SUBSYSTEM_MISCONFIGURATION):
            return self.topo.service_by_name(self.fault.location)
        return None

    def run(self) -> TelemetryStore:
        self._pick_benign_anomaly()
        if self.work.rate_per_s > 0:
            self._chatter()
            self._health_checks()
            self._user_requests()
        store = TelemetryStore(
            switches=[
                SwitchLog(sid, np.array(self.packets[sid], dtype=np.float64) if self.packets[sid] else empty_packets())
                for sid in self.topo.switch_ids()
            ],
            spans=self.spans,
            containers=self._containers(),
            functions=self.topo.function_names(),
            duration_s=self.work.duration_s,
        )
        return store

    def _pick_benign_anomaly(self) -> None:
        # draw unconditionally to keep the stream aligned across fault configs
        roll = self.rng.random()
        kind = _BENIGN_KINDS[int(self.rng.integers(0, len(_BENIGN_KINDS)))]
        if kind in ("queue_blip", "pkt_dip"):
            switches = [s for s in self.topo.switch_ids() if s != ROUTER_ID]
            target: object = int(switches[int(self.rng.integers(0, len(switches)))])
        elif kind == "cpu_blip":
            hosts = self.topo.host_ids()
            target = hosts[int(self.rng.integers(0, len(hosts)))]
        else:
            fns = self.topo.function_names()
            target = fns[int(self.rng.integers(0, len(fns)))]
        if roll >= self.work.benign_anomaly_rate:
            return
        if self.fault is not None and self._benign_collides(kind, target):
            return
        self.benign = (kind, target)

    def _benign_collides(self, kind: str, target) -> bool:
        fault = self.fault
        if kind in ("queue_blip", "pkt_dip"):
            if fault.category in (NETWORK_CONGESTION, NETWORK_MISCONFIGURATION):
                return target == fault.location
            svc = self.topo.service_for_switch(int(target))
            return svc is not None and fault.location in (svc.name,) + svc.functions
        if kind == "cpu_blip":
            svc = self.topo.service_for_host(str(target))
            return fault.location in (svc.name,) + svc.functions
        svc = self.topo.service_for_function(str(target))
        return fault.location in (svc.name,) + svc.functions

    # network ------------------------------------------------------------

    def _qsize(self, switch_id: int) -> int:
        base = 0
        if switch_id == ROUTER_ID:
            base = int(self.rng.poisson(0.4))
        elif self.rng.random() < 0.12:
            base = 1 + int(self.rng.geometric(0.6))
        if self._fault_is(NETWORK_CONGESTION) and switch_id == self.fault.location:
            base += 4 + int(self.rng.poisson(6.0 * self.fault.severity))
        if self.benign is not None and self.benign[0] == "queue_blip" and switch_id == self.benign[1]:
            base += int(self.rng.poisson(1.0))
        return base

    def _log_packet(self, switch_id: int, t: float, flow: tuple[int, int, int, int, int]) -> None:
        qsize = self._qsize(switch_id)
        if self._fault_is(NETWORK_MISCONFIGURATION) and switch_id == self.fault.location:
            if self.rng.random() > 0.04:
                return
        if self.benign is not None and self.benign[0] == "pkt_dip" and switch_id == self.benign[1]:
            if self.rng.random() > 0.7:
                return
        src, dst, sport, dport, proto = flow
        self.packets[switch_id].append([round(t, 2), src, dst, sport, dport, proto, qsize])

    def _send_flow(self, t: float, path: list[int], flow: tuple[int, int, int, int, int], n_pkts: int) -> None:
        for k in range(n_pkts):
            pkt_t = t + 0.01 * k
            for sid in path:
                self._log_packet(sid, pkt_t, flow)

    def _backend_path(self, svc: Service) -> list[int]:
        fe = self.topo.frontend
        return [fe.edge_switch, fe.core_switch, ROUTER_ID, svc.core_switch, svc.edge_switch]

    def _chatter(self) -> None:
        """Router keepalives seen by core switches only."""

        scale = self.work.duration_s / 40.0
        for svc in self.topo.services:
            n = int(self.rng.poisson(3.0 * scale))
            for _ in range(n):
                t = self.rng.uniform(0.0, self.work.duration_s)
                flow = (0, svc.index + 1, 520, 520, 89)
                self._log_packet(svc.core_switch, t, flow)

    # requests -----------------------------------------------------------

    def _span(self, svc: Service, fn: str, t: float, *, error=False, exc=0, dur_scale=1.0, caller_of_failed=False) -> None:
        fault = self.fault
        dur = _base_duration_ms(fn) * float(self.rng.lognormal(0.0, 0.35)) * dur_scale
        vars_ = int(self.rng.poisson(_base_variables(fn)))
        exceptions = exc
        err = error
        message = None

        if fault is not None:
            if fault.category == RESOURCE_UNDERPROVISIONING and svc.name == fault.location:
                dur *= {"cpu": 2.8, "mem": 2.2, "disk": 2.0}[fault.resource] + 0.8 * (fault.severity - 1.0)
            elif fault.category == NETWORK_CONGESTION:
                target_svc = self.topo.service_for_switch(int(fault.location))
                if target_svc is not None and svc.name == target_svc.name:
                    dur *= 1.6
            elif fault.category == SOURCE_CODE_BUG and fn == fault.location:
                vars_ = int(self.rng.poisson(0.5))
                dur *= 0.65
            elif fault.category == INCORRECT_DATA_EXCHANGE and fn == fault.location:
                exceptions += 1 + int(self.rng.poisson(1.5))
                err = err or (self.rng.random() < 0.5)
                message = "argument violation" if err else None
                dur *= 1.15
            elif fault.category == SUBSYSTEM_MISCONFIGURATION and svc.name == fault.location and fn == svc.entry_function:
                if self.rng.random() < 0.95:
                    err = True
                    message = "connection failed"
                exceptions += 1 + int(self.rng.poisson(2.5))
                dur *= 1.35

        if caller_of_failed:
            err = True
            message = "connection failed"
            exceptions += 1
            dur *= 2.5
        if self.benign is not None and self.benign[0] == "exc_blip" and fn == self.benign[1]:
            exceptions += int(self.rng.random() < 0.12)

        self.spans.append(
            SpanRecord(
                name=fn,
                time=round(t, 2),
                duration_ms=round(dur, 2),
                variable_count=vars_,
                exception_count=exceptions,
                error=err,
                error_message=message,
            )
        )

    def _service_spans(self, svc: Service, t: float, internal_p: float, all_internals: bool = False) -> None:
        failed = self._failed_service()
        if failed is not None and svc.name == failed.name:
            return  # container is down; nothing gets traced
        self._span(svc, svc.entry_function, t)
        bug_fn = self.fault.location if self._fault_is(SOURCE_CODE_BUG) else None
        skip_fn = None
        if bug_fn is not None:
            owner = self.topo.service_for_function(bug_fn)
            if owner.name == svc.name:
                fns = list(svc.functions)
                skip_fn = fns[(fns.index(bug_fn) + 1) % len(fns)]
        for fn in svc.functions[1:]:
            p = 1.0 if all_internals else internal_p
            if fn == skip_fn and not all_internals:
                p *= 0.3  # the bug short-circuits this downstream call
            if self.rng.random() < p:
                self._span(svc, fn, t + float(self.rng.uniform(0.001, 0.01)))

    def _client_flow(self, t: float, req_idx: int, retries: bool = False) -> None:
        fe = self.topo.frontend
        flow = (100, fe.index + 1, 50000 + req_idx % 5000, 80, 6)
        n = 2 + int(self.rng.poisson(1.5))
        if retries:
            n += 2 + int(self.rng.poisson(2.0))  # timeouts make the client retry
        self._send_flow(t, [ROUTER_ID, fe.core_switch, fe.edge_switch], flow, n)

    def _backend_flow(self, svc: Service, t: float, req_idx: int, n_pkts: int | None = None) -> None:
        failed = self._failed_service()
        if failed is not None and svc.name == failed.name:
            return  # no traffic to/from a failed component
        fe = self.topo.frontend
        flow = (fe.index + 1, svc.index + 1, 40000 + req_idx % 5000, 9000 + svc.index, 6)
        n = n_pkts if n_pkts is not None else 2 + int(self.rng.poisson(2.5))
        if self._misconfigured_service() is not None and svc.name == self.fault.location:
            n = max(1, int(round(n * 0.55)))  # misconfigured service completes fewer exchanges
        self._send_flow(t, self._backend_path(svc), flow, n)

    def _frontend_request(self, t: float, req_idx: int, backends: list[Service]) -> None:
        fe = self.topo.frontend
        self.hits[fe.name] += 1
        retries = False
        if self._fault_is(NETWORK_MISCONFIGURATION):
            svc = self.topo.service_for_switch(int(self.fault.location))
            retries = svc is not None and any(b.name == svc.name for b in backends)
        self._client_flow(t, req_idx, retries=retries)
        failed = self._failed_service()
        caller_err = failed is not None and any(b.name == failed.name for b in backends)
        self._span(fe, fe.entry_function, t, caller_of_failed=caller_err)
        for fn in fe.functions[1:]:
            if self.rng.random() < 0.5:
                self._span(fe, fn, t + float(self.rng.uniform(0.001, 0.01)))
        for svc in backends:
            self.hits[svc.name] += 1
            self._backend_flow(svc, t + float(self.rng.uniform(0.002, 0.02)), req_idx)
            self._service_spans(svc, t + float(self.rng.uniform(0.005, 0.03)), internal_p=0.6)

    def _health_checks(self) -> None:
        rounds = max(1, int(self.work.duration_s // 10))
        for r in range(rounds):
            base = 0.2 + 10.0 * r
            trace_round = r == 0  # the prober traces one round per window
            for svc in self.topo.services:
                t = base + 0.05 * svc.index
                if svc.index == 0:
                    if trace_round:
                        self._span(svc, svc.entry_function, t)
                        for fn in svc.functions[1:]:
                            self._span(svc, fn, t + 0.005)
                    continue
                self.hits[svc.name] += 1
                self._backend_flow(svc, t, req_idx=svc.index, n_pkts=3)
                failed = self._failed_service()
                if failed is not None and svc.name == failed.name:
                    continue
                if trace_round:
                    self._span(svc, svc.entry_function, t)
                    for fn in svc.functions[1:]:
                        self._span(svc, fn, t + 0.005)

    def _user_requests(self) -> None:
        amp = float(self.rng.uniform(0.85, 1.25))  # concurrent-user amplitude jitter
        n_requests = int(self.rng.poisson(self.work.rate_per_s * amp * self.work.duration_s))
        times = np.sort(self.rng.uniform(1.0, self.work.duration_s, size=n_requests))
        backends = self.topo.services[1:]
        max_fan = min(len(backends), max(1, 3))
        for i, t in enumerate(times):
            k = 1 + int(self.rng.integers(0, max_fan))
            chosen_idx = self.rng.choice(len(backends), size=k, replace=False)
            chosen = [backends[j] for j in sorted(chosen_idx)]
            self._frontend_request(float(t), i, chosen)

    # containers ---------------------------------------------------------

    def _containers(self) -> list[ContainerLog]:
        total_hits = max(1, sum(self.hits.values()))
        fault = self.fault
        out: list[ContainerLog] = []
        n_samples = int(self.work.duration_s)
        for svc in self.topo.services:
            share = self.hits[svc.name] / total_hits
            cpu0 = _base_cpu(svc) + 0.6 * share
            mem0 = _base_mem(svc)
            disk0 = 2.0e6
            failed = fault is not None and fault.category == COMPONENT_FAILURE and svc.name == fault.location
            under = (
                fault is not None
                and fault.category == RESOURCE_UNDERPROVISIONING
                and svc.name == fault.location
            )
            cpu_blip = self.benign is not None and self.benign[0] == "cpu_blip" and self.benign[1] == svc.host_id
            samples = []
            for second in range(n_samples):
                if failed:
                    cpu = abs(self.rng.normal(0.004, 0.002))
                    mem = abs(self.rng.normal(0.02, 0.005))
                    disk = abs(self.rng.normal(1e4, 5e3))
                else:
                    cpu = self.rng.normal(cpu0, 0.03)
                    mem = self.rng.normal(mem0, 0.015)
                    disk = self.rng.normal(disk0, 4e5)
                    if under:
                        if fault.resource == "cpu":
                            cpu = self.rng.normal(0.985, 0.01)
                        elif fault.resource == "mem":
                            mem = self.rng.normal(0.975, 0.008)
                        else:
                            disk = self.rng.normal(9.0e6, 3e5)
                    if cpu_blip:
                        cpu += 0.25
                samples.append(
                    [
                        float(second),
                        round(float(np.clip(cpu, 0.0, 1.0)), 4),
                        round(float(np.clip(mem, 0.0, 1.0)), 4),
                        float(round(max(0.0, disk))),
                    ]
                )
            array = np.array(samples, dtype=np.float64) if samples else empty_samples()
            out.append(ContainerLog(host_id=svc.host_id, container_id=svc.container_id, samples=array))
        return out


def simulate(world: FaultyWorld, workload: Workload, seed: int) -> TelemetryStore:
    """Produce the telemetry store for one scenario window."""

    if workload.duration_s <= 0:
        raise ValueError("workload duration must be positive")
    return _Sim(world, workload, seed).run()
