"""Labeled-scenario dataset generation, splits, and JSONL serialization.

Scenario counts split 53/13/34 into train/val/test; the test share is
further divided into ``test_repeat`` (fault template *and* parameters seen
in training) and ``test_generalize`` (template seen, parameters from
locations held out of training). Holdout is arranged by partitioning
backend services into a seen pool and a generalize pool, so parameters
derived from generalize-pool subsystems never occur in training for any
template.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dsl import QueryAst, detect_dialect, parse_query
from ..errors import ConfigError
import numpy as np  # noqa: F811  (columnar log arrays)

from ..telemetry import (
    ContainerLog,
    SpanRecord,
    SwitchLog,
    TelemetryStore,
    empty_packets,
    empty_samples,
)
from .faults import (
    CATEGORIES,
    COMPONENT_FAILURE,
    INCORRECT_DATA_EXCHANGE,
    LOCATION_KIND,
    NETWORK_CONGESTION,
    NETWORK_MISCONFIGURATION,
    RESOURCE_UNDERPROVISIONING,
    RESOURCES,
    SOURCE_CODE_BUG,
    SUBSYSTEM_MISCONFIGURATION,
    TICKET_MIX,
    FaultSpec,
    fault_from_json,
    fault_to_json,
    inject_fault,
)
from .groundtruth import ground_truth_query
from .reports import CHOICE_FLAGS, UserReport, synthesize_report
from .simulate import Workload, simulate
from .topology import Topology, build_topology, default_app_spec

SPLITS = ("train", "val", "test_repeat", "test_generalize")

# how strongly each category is represented among generalize faults
_GENERALIZE_WEIGHTS = {
    COMPONENT_FAILURE: 2.0,
    NETWORK_MISCONFIGURATION: 1.2,
    NETWORK_CONGESTION: 1.2,
    SOURCE_CODE_BUG: 1.0,
    RESOURCE_UNDERPROVISIONING: 0.8,
    INCORRECT_DATA_EXCHANGE: 0.5,
    SUBSYSTEM_MISCONFIGURATION: 0.5,
}


@dataclass(frozen=True)
class DatasetConfig:
    n_services: int = 14
    n_faults: int = 60
    reports_per_fault: int = 10
    seed: int = 7
    duration_s: float = 40.0
    rate_per_s: float = 1.0
    benign_anomaly_rate: float = 0.35
    generalize_fraction: float = 0.2
    generalize_service_fraction: float = 0.35
    fault_mix: dict[str, int] | None = None  # defaults to production ticket ratios

    def to_json(self) -> dict:
        return {
            "n_services": self.n_services,
            "n_faults": self.n_faults,
            "reports_per_fault": self.reports_per_fault,
            "seed": self.seed,
            "duration_s": self.duration_s,
            "rate_per_s": self.rate_per_s,
            "benign_anomaly_rate": self.benign_anomaly_rate,
            "generalize_fraction": self.generalize_fraction,
            "generalize_service_fraction": self.generalize_service_fraction,
            "fault_mix": self.fault_mix,
        }

    @staticmethod
    def from_json(obj: dict) -> "DatasetConfig":
        return DatasetConfig(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in obj.items()})


@dataclass
class Scenario:
    id: str
    app: str
    fault: FaultSpec
    report: UserReport
    store: TelemetryStore
    ground_truth: str  # canonical query text
    split: str

    _gt_ast: QueryAst | None = field(default=None, repr=False, compare=False)

    @property
    def ground_truth_ast(self) -> QueryAst:
        if self._gt_ast is None:
            self._gt_ast = parse_query(self.ground_truth, detect_dialect(self.ground_truth))
        return self._gt_ast


@dataclass
class Dataset:
    config: DatasetConfig
    topology: Topology
    scenarios: list[Scenario]

    def by_split(self, split: str) -> list[Scenario]:
        return [s for s in self.scenarios if s.split == split]

    def split_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in SPLITS}
        for s in self.scenarios:
            counts[s.split] += 1
        return counts


def _apportion(total: int, weights: dict[str, float]) -> dict[str, int]:
    """Largest-remainder apportionment with a deterministic tie order."""

    weight_sum = sum(weights.values())
    shares = {k: total * w / weight_sum for k, w in weights.items()}
    counts = {k: int(np.floor(v)) for k, v in shares.items()}
    leftovers = sorted(weights, key=lambda k: (-(shares[k] - counts[k]), list(weights).index(k)))
    for k in leftovers[: total - sum(counts.values())]:
        counts[k] += 1
    return counts


def split_sizes(n: int) -> tuple[int, int, int]:
    """Exact 53/13/34 scenario counts."""

    train = int(round(n * 0.53))
    val = int(round(n * 0.13))
    return train, val, n - train - val


@dataclass(frozen=True)
class _PlannedFault:
    spec: FaultSpec
    generalize: bool


def _plan_faults(config: DatasetConfig, topology: Topology, rng: np.random.Generator) -> list[_PlannedFault]:
    mix = dict(config.fault_mix) if config.fault_mix else dict(TICKET_MIX)
    unknown = set(mix) - set(CATEGORIES)
    if unknown:
        raise ConfigError(f"unknown categories in fault mix: {sorted(unknown)}")
    quotas = _apportion(config.n_faults, {c: float(mix.get(c, 0)) for c in CATEGORIES if mix.get(c, 0) > 0})

    g_total = int(round(config.n_faults * config.generalize_fraction))
    capacity = sum(max(0, quotas[c] - 2) for c in quotas)
    if g_total > capacity:
        raise ConfigError(
            f"generalize fraction needs {g_total} held-out faults but the mix supports {capacity}"
        )
    g_weights = {c: quotas[c] * _GENERALIZE_WEIGHTS.get(c, 1.0) for c in quotas}
    g_counts = _apportion(g_total, g_weights) if g_total else {c: 0 for c in quotas}
    # keep at least two seen faults per category: one seen location cannot
    # demonstrate location transfer, and the template would be undertrained
    for _ in range(len(g_counts)):
        surplus = 0
        for cat in g_counts:
            cap = max(0, quotas[cat] - 2)
            if g_counts[cat] > cap:
                surplus += g_counts[cat] - cap
                g_counts[cat] = cap
        if surplus == 0:
            break
        order = sorted(g_counts, key=lambda c: (-g_weights[c], list(quotas).index(c)))
        for cat in order:
            if surplus == 0:
                break
            room = max(0, quotas[cat] - 2) - g_counts[cat]
            take = min(room, surplus)
            g_counts[cat] += take
            surplus -= take
    if sum(g_counts.values()) == 0 and g_total > 0:
        raise ConfigError("cannot hold out any fault location; add faults or lower generalize_fraction")

    backends = list(topology.services[1:])
    n_gen_services = max(1, int(np.ceil(len(backends) * config.generalize_service_fraction)))
    if n_gen_services >= len(backends):
        raise ConfigError("not enough services to form a holdout pool")
    order = rng.permutation(len(backends))
    gen_services = [backends[i] for i in order[:n_gen_services]]
    seen_services = [backends[i] for i in order[n_gen_services:]]

    def service_pool(pool):  # stable id order within the pool
        return sorted(pool, key=lambda s: s.index)

    def switch_pool(pool):
        out = []
        for svc in service_pool(pool):
            out.extend((svc.edge_switch, svc.core_switch))
        return out

    def function_pool(pool, internals_only: bool):
        out = []
        for svc in service_pool(pool):
            fns = svc.functions[1:] if internals_only else svc.functions
            out.extend(fns)
        return out

    def locations_for(category: str, pool) -> list:
        kind = LOCATION_KIND[category]
        if kind == "service":
            return [s.name for s in service_pool(pool)]
        if kind == "switch":
            return switch_pool(pool)
        return function_pool(pool, internals_only=(category == SOURCE_CODE_BUG))

    planned: list[_PlannedFault] = []
    resource_cycle = 0
    for category in CATEGORIES:
        quota = quotas.get(category, 0)
        if quota == 0:
            continue
        n_gen = g_counts.get(category, 0)
        seen_locs = locations_for(category, seen_services)
        gen_locs = locations_for(category, gen_services)
        if not seen_locs or (n_gen > 0 and not gen_locs):
            raise ConfigError(f"no locations available for category {category}")
        seen_order = [seen_locs[i] for i in rng.permutation(len(seen_locs))]
        gen_order = [gen_locs[i] for i in rng.permutation(len(gen_locs))]
        seen_resources: list[str] = []
        for j in range(quota):
            generalize = j >= quota - n_gen
            pool_order = gen_order if generalize else seen_order
            location = pool_order[(j if not generalize else j - (quota - n_gen)) % len(pool_order)]
            if category == RESOURCE_UNDERPROVISIONING:
                if generalize:
                    # hold out a location for the resource with the broadest
                    # training coverage; a template seen at one location
                    # cannot demonstrate location transfer
                    counts = {r: seen_resources.count(r) for r in RESOURCES}
                    resource = max(RESOURCES, key=lambda r: (counts.get(r, 0), -RESOURCES.index(r)))
                else:
                    resource = RESOURCES[resource_cycle % len(RESOURCES)]
                    resource_cycle += 1
                    seen_resources.append(resource)
                magnitude: object = {"resource": resource, "severity": round(float(rng.uniform(0.9, 1.2)), 3)}
            else:
                magnitude = round(float(rng.uniform(0.9, 1.2)), 3)
            fault_seed = int(rng.integers(0, 2**31 - 1))
            planned.append(
                _PlannedFault(
                    spec=FaultSpec(category=category, location=location, magnitude=magnitude, seed=fault_seed),
                    generalize=generalize,
                )
            )
    return planned


def _plan_split_quotas(n_seen: int, train_total: int, val_total: int, repeat_total: int, per_fault: int) -> list[tuple[int, int, int]]:
    if n_seen == 0:
        raise ConfigError("no seen faults to train on")
    if train_total < n_seen:
        raise ConfigError("not enough training scenarios to cover every seen fault")
    base = [
        [train_total // n_seen, val_total // n_seen, repeat_total // n_seen]
        for _ in range(n_seen)
    ]
    deficits = [
        train_total - sum(q[0] for q in base),
        val_total - sum(q[1] for q in base),
        repeat_total - sum(q[2] for q in base),
    ]
    i = 0
    while sum(deficits) > 0:
        quota = base[i % n_seen]
        if sum(quota) < per_fault:
            bucket = int(np.argmax(deficits))
            if deficits[bucket] > 0:
                quota[bucket] += 1
                deficits[bucket] -= 1
        i += 1
        if i > 10 * n_seen * per_fault:
            raise ConfigError("split quotas infeasible for this configuration")
    return [tuple(q) for q in base]


def generate_dataset(config: DatasetConfig) -> Dataset:
    """Build the full labeled dataset; a pure function of the config."""

    if config.n_faults < len(CATEGORIES):
        raise ConfigError(f"need at least {len(CATEGORIES)} faults to cover the category mix")
    if config.reports_per_fault < 1:
        raise ConfigError("reports_per_fault must be >= 1")

    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0xD5]))
    topology = build_topology(default_app_spec(config.n_services), seed=config.seed)
    planned = _plan_faults(config, topology, rng)

    n_total = len(planned) * config.reports_per_fault
    train_total, val_total, test_total = split_sizes(n_total)
    gen_scenarios = sum(1 for p in planned if p.generalize) * config.reports_per_fault
    repeat_total = test_total - gen_scenarios
    if repeat_total < 0:
        raise ConfigError(
            f"generalize share ({gen_scenarios} scenarios) exceeds the test split ({test_total}); "
            "lower generalize_fraction"
        )
    seen = [p for p in planned if not p.generalize]
    quotas = _plan_split_quotas(len(seen), train_total, val_total, repeat_total, config.reports_per_fault)

    split_for: dict[int, list[str]] = {}
    seen_idx = 0
    for fault_idx, plan in enumerate(planned):
        if plan.generalize:
            split_for[fault_idx] = ["test_generalize"] * config.reports_per_fault
            continue
        train_n, val_n, repeat_n = quotas[seen_idx]
        seen_idx += 1
        labels = ["train"] * train_n + ["val"] * val_n + ["test_repeat"] * repeat_n
        order = np.random.default_rng(np.random.SeedSequence([config.seed, fault_idx, 0x51])).permutation(
            config.reports_per_fault
        )
        assigned = [""] * config.reports_per_fault
        for k, rep_idx in enumerate(order):
            assigned[rep_idx] = labels[k]
        split_for[fault_idx] = assigned

    workload = Workload(
        rate_per_s=config.rate_per_s,
        duration_s=config.duration_s,
        benign_anomaly_rate=config.benign_anomaly_rate,
    )
    scenarios: list[Scenario] = []
    for fault_idx, plan in enumerate(planned):
        world = inject_fault(topology, plan.spec)
        gt_text_ast = ground_truth_query(plan.spec, topology)
        from ..dsl import render_query

        gt_text = render_query(gt_text_ast)
        for rep_idx in range(config.reports_per_fault):
            seq = np.random.SeedSequence([config.seed, fault_idx, rep_idx])
            sim_seed, report_seed = (int(x) for x in seq.generate_state(2))
            store = simulate(world, workload, sim_seed)
            report = synthesize_report(plan.spec, report_seed)
            scenarios.append(
                Scenario(
                    id=f"s{len(scenarios):04d}",
                    app=topology.app,
                    fault=plan.spec,
                    report=report,
                    store=store,
                    ground_truth=gt_text,
                    split=split_for[fault_idx][rep_idx],
                )
            )
    return Dataset(config=config, topology=topology, scenarios=scenarios)


# ---------------------------------------------------------------------------
# serialization


def _packets_json(packets) -> list:
    # time stays float; the identifier/count columns are integral
    return [
        [round(float(row[0]), 2)] + [int(v) for v in row[1:]]
        for row in packets.tolist()
    ]


def _samples_json(samples) -> list:
    return [
        [round(float(t), 2), round(float(cpu), 4), round(float(mem), 4), int(disk)]
        for t, cpu, mem, disk in samples.tolist()
    ]


def _store_to_json(store: TelemetryStore) -> dict:
    return {
        "switches": [
            {"id": log.switch_id, "packets": _packets_json(log.packets)}
            for log in store.switches
        ],
        "spans": [
            [s.name, s.time, s.duration_ms, s.variable_count, s.exception_count, int(s.error), s.error_message]
            for s in store.spans
        ],
        "containers": [
            {
                "host": log.host_id,
                "container": log.container_id,
                "samples": _samples_json(log.samples),
            }
            for log in store.containers
        ],
        "functions": list(store.functions),
        "duration_s": float(store.duration_s),
    }


def _store_from_json(obj: dict) -> TelemetryStore:
    switches = [
        SwitchLog(
            switch_id=int(entry["id"]),
            packets=np.array(entry["packets"], dtype=np.float64) if entry["packets"] else empty_packets(),
        )
        for entry in obj["switches"]
    ]
    spans = [
        SpanRecord(
            name=s[0],
            time=s[1],
            duration_ms=s[2],
            variable_count=int(s[3]),
            exception_count=int(s[4]),
            error=bool(s[5]),
            error_message=s[6],
        )
        for s in obj["spans"]
    ]
    containers = [
        ContainerLog(
            host_id=entry["host"],
            container_id=entry.get("container", entry["host"]),
            samples=np.array(entry["samples"], dtype=np.float64) if entry["samples"] else empty_samples(),
        )
        for entry in obj["containers"]
    ]
    return TelemetryStore(
        switches=switches,
        spans=spans,
        containers=containers,
        functions=list(obj["functions"]),
        duration_s=float(obj["duration_s"]),
    )


def scenario_to_json(scenario: Scenario) -> dict:
    return {
        "id": scenario.id,
        "app": scenario.app,
        "fault": fault_to_json(scenario.fault),
        "report": {"text": scenario.report.text, "choices": scenario.report.choices},
        "logs": _store_to_json(scenario.store),
        "ground_truth_query": scenario.ground_truth,
        "split": scenario.split,
    }


def scenario_from_json(obj: dict) -> Scenario:
    choices = {flag: bool(obj["report"]["choices"].get(flag, False)) for flag in CHOICE_FLAGS}
    return Scenario(
        id=obj["id"],
        app=obj["app"],
        fault=fault_from_json(obj["fault"]),
        report=UserReport(text=obj["report"]["text"], choices=choices),
        store=_store_from_json(obj["logs"]),
        ground_truth=obj["ground_truth_query"],
        split=obj["split"],
    )


def save_dataset(dataset: Dataset, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "dataset.jsonl", "w", encoding="utf-8") as fh:
        for scenario in dataset.scenarios:
            fh.write(json.dumps(scenario_to_json(scenario), separators=(",", ":"), ensure_ascii=False))
            fh.write("\n")
    manifest = {
        "app": dataset.topology.app,
        "config": dataset.config.to_json(),
        "n_scenarios": len(dataset.scenarios),
        "splits": dataset.split_counts(),
        "services": [
            {
                "name": svc.name,
                "index": svc.index,
                "container_id": svc.container_id,
                "host_id": svc.host_id,
                "functions": list(svc.functions),
            }
            for svc in dataset.topology.services
        ],
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    return out


def load_dataset(path: str | Path) -> Dataset:
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise ConfigError(f"no manifest.json under {root}")
    manifest = json.loads(manifest_path.read_text())
    config = DatasetConfig.from_json(manifest["config"])
    topology = build_topology(default_app_spec(config.n_services), seed=config.seed)
    scenarios = []
    with open(root / "dataset.jsonl", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                scenarios.append(scenario_from_json(json.loads(line)))
    return Dataset(config=config, topology=topology, scenarios=scenarios)
