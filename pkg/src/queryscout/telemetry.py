"""Raw telemetry and its two model-facing views.

The store keeps per-subsystem records: per-packet switch samples and
per-second container samples as columnar arrays (they dominate volume),
and function spans as records. Featurization reduces each subsystem to
fixed-order summary statistics plus its per-feature rank within its kind;
the log vector concatenates value-sorted segments so that model inputs
depend on order statistics rather than on subsystem identities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

SWITCH_KIND = "switch"
FUNCTION_KIND = "function"
CONTAINER_KIND = "container"

KINDS = (SWITCH_KIND, FUNCTION_KIND, CONTAINER_KIND)

METRICS: dict[str, tuple[str, ...]] = {
    SWITCH_KIND: ("packet_count", "queue_depth"),
    FUNCTION_KIND: ("variable_count", "duration_ms", "exception_count"),
    CONTAINER_KIND: ("cpu_util", "mem_util", "disk_throughput"),
}

ALL_METRICS = tuple(m for kind in KINDS for m in METRICS[kind])

STATS = ("min", "max", "mean", "median", "stdev")

#: packet array columns
PKT_COLS = ("time", "src", "dst", "sport", "dport", "proto", "qsize")
PKT = {name: i for i, name in enumerate(PKT_COLS)}

#: container sample array columns
SAMPLE_COLS = ("time", "cpu_util", "mem_util", "disk_throughput")
SAMPLE = {name: i for i, name in enumerate(SAMPLE_COLS)}


def empty_packets() -> np.ndarray:
    return np.zeros((0, len(PKT_COLS)), dtype=np.float64)


def empty_samples() -> np.ndarray:
    return np.zeros((0, len(SAMPLE_COLS)), dtype=np.float64)


@dataclass
class SwitchLog:
    """Per-packet records observed at one switch, shape (n, 7)."""

    switch_id: int
    packets: np.ndarray = field(default_factory=empty_packets)


@dataclass(slots=True)
class SpanRecord:
    """One traced function execution."""

    name: str
    time: float
    duration_ms: float
    variable_count: int
    exception_count: int
    error: bool
    error_message: str | None = None


@dataclass
class ContainerLog:
    """Per-second resource samples for one container, shape (n, 4)."""

    host_id: str
    container_id: str
    samples: np.ndarray = field(default_factory=empty_samples)


@dataclass
class TelemetryStore:
    """Everything recorded during one scenario window.

    ``functions`` is the roster of traced function names; functions with
    zero spans still exist and featurize as absent.
    """

    switches: list[SwitchLog] = field(default_factory=list)
    spans: list[SpanRecord] = field(default_factory=list)
    containers: list[ContainerLog] = field(default_factory=list)
    functions: list[str] = field(default_factory=list)
    duration_s: float = 0.0

    def subsystem_ids(self, kind: str) -> list:
        if kind == SWITCH_KIND:
            return sorted(s.switch_id for s in self.switches)
        if kind == FUNCTION_KIND:
            return sorted(self.functions)
        if kind == CONTAINER_KIND:
            return sorted(c.host_id for c in self.containers)
        raise ValueError(f"unknown subsystem kind {kind!r}")


@dataclass
class SubsystemFeatures:
    subsystem_id: int | str
    kind: str
    features: np.ndarray   # metric-major: (metric0.min, metric0.max, ... metric1.min, ...)
    ranks: np.ndarray      # aligned with features; 0.0 = largest value of its kind
    absent: bool = False


def feature_names(kind: str, drop_metrics: tuple[str, ...] = ()) -> list[str]:
    return [f"{m}.{s}" for m in METRICS[kind] if m not in drop_metrics for s in STATS]


def _stats_of(values: np.ndarray) -> list[float]:
    if values.size == 0:
        return [0.0] * len(STATS)
    return [
        float(np.min(values)),
        float(np.max(values)),
        float(np.mean(values)),
        float(np.median(values)),
        float(np.std(values)),
    ]


def _metric_series(store: TelemetryStore) -> dict[str, dict]:
    """Per-kind, per-subsystem raw series for every metric."""

    n_buckets = max(1, int(np.ceil(store.duration_s))) if store.duration_s > 0 else 1

    switch_series: dict = {}
    for log in store.switches:
        if log.packets.shape[0]:
            times = log.packets[:, PKT["time"]]
            counts = np.bincount(
                np.clip(times.astype(np.int64), 0, n_buckets - 1), minlength=n_buckets
            ).astype(np.float64)
            qsizes = log.packets[:, PKT["qsize"]]
        else:
            counts = np.zeros(0)
            qsizes = np.zeros(0)
        switch_series[log.switch_id] = {
            "packet_count": counts,
            "queue_depth": qsizes,
            "_absent": log.packets.shape[0] == 0,
        }

    by_fn: dict[str, list[SpanRecord]] = {name: [] for name in store.functions}
    for span in store.spans:
        by_fn.setdefault(span.name, []).append(span)
    fn_series: dict = {}
    for name, spans in by_fn.items():
        fn_series[name] = {
            "variable_count": np.array([s.variable_count for s in spans], dtype=np.float64),
            "duration_ms": np.array([s.duration_ms for s in spans], dtype=np.float64),
            "exception_count": np.array([s.exception_count for s in spans], dtype=np.float64),
            "_absent": not spans,
        }

    cont_series: dict = {}
    for log in store.containers:
        present = log.samples.shape[0] > 0
        cont_series[log.host_id] = {
            "cpu_util": log.samples[:, SAMPLE["cpu_util"]] if present else np.zeros(0),
            "mem_util": log.samples[:, SAMPLE["mem_util"]] if present else np.zeros(0),
            "disk_throughput": log.samples[:, SAMPLE["disk_throughput"]] if present else np.zeros(0),
            "_absent": not present,
        }

    return {SWITCH_KIND: switch_series, FUNCTION_KIND: fn_series, CONTAINER_KIND: cont_series}


def featurize(store: TelemetryStore, drop_metrics: tuple[str, ...] = ()) -> list[SubsystemFeatures]:
    """Summary statistics plus within-kind ranks for every subsystem.

    Deterministic: subsystems are ordered by kind then ascending id, and
    rank ties break toward the smaller id.
    """

    series = _metric_series(store)
    if all(not series[kind] for kind in KINDS):
        raise ConfigError("telemetry store has no subsystems")
    out: list[SubsystemFeatures] = []
    for kind in KINDS:
        per_kind = series[kind]
        ids = sorted(per_kind)
        metrics = [m for m in METRICS[kind] if m not in drop_metrics]
        rows = np.zeros((len(ids), len(metrics) * len(STATS)), dtype=np.float64)
        for i, sid in enumerate(ids):
            for j, metric in enumerate(metrics):
                rows[i, j * len(STATS) : (j + 1) * len(STATS)] = _stats_of(per_kind[sid][metric])
        ranks = _rank_rows(rows)
        for i, sid in enumerate(ids):
            out.append(
                SubsystemFeatures(
                    subsystem_id=sid,
                    kind=kind,
                    features=rows[i].copy(),
                    ranks=ranks[i].copy(),
                    absent=bool(per_kind[sid]["_absent"]),
                )
            )
    return out


def _rank_rows(rows: np.ndarray) -> np.ndarray:
    """Column-wise descending ranks normalized to [0, 1]; ties keep row order."""

    n, width = rows.shape
    ranks = np.zeros_like(rows)
    if n <= 1:
        return ranks
    for j in range(width):
        order = np.lexsort((np.arange(n), -rows[:, j]))  # by value desc, then row index asc
        positions = np.empty(n, dtype=np.int64)
        positions[order] = np.arange(n)
        ranks[:, j] = positions / (n - 1)
    return ranks


@dataclass(frozen=True)
class LogLayout:
    """Declared order of (kind, metric, stat) segments and their slot counts."""

    segments: tuple[tuple[str, str, str, int], ...]  # (kind, metric, stat, slots)
    rank_order: bool = True

    @property
    def width(self) -> int:
        return sum(seg[3] for seg in self.segments)

    @staticmethod
    def build(slots_per_kind: dict[str, int], drop_metrics: tuple[str, ...] = (), rank_order: bool = True) -> "LogLayout":
        segments = []
        for kind in KINDS:
            slots = slots_per_kind.get(kind, 0)
            if slots <= 0:
                continue
            for metric in METRICS[kind]:
                if metric in drop_metrics:
                    continue
                for stat in STATS:
                    segments.append((kind, metric, stat, slots))
        return LogLayout(segments=tuple(segments), rank_order=rank_order)


@dataclass
class LogVector:
    values: np.ndarray
    layout: LogLayout


def build_log_vector(features: list[SubsystemFeatures], layout: LogLayout) -> LogVector:
    """Concatenate per-feature segments in layout order.

    With rank ordering on, each segment holds the descending-sorted values
    across the kind's subsystems; otherwise values stay in ascending-id
    order. Empty slots are NaN until normalization maps them to 0.
    """

    by_kind: dict[str, list[SubsystemFeatures]] = {k: [] for k in KINDS}
    for feat in features:
        by_kind[feat.kind].append(feat)
    for kind in KINDS:
        by_kind[kind].sort(key=lambda f: f.subsystem_id)

    pieces: list[np.ndarray] = []
    for kind, metric, stat, slots in layout.segments:
        feats = by_kind[kind]
        names = feature_names(kind)
        try:
            col = names.index(f"{metric}.{stat}")
        except ValueError:
            raise ConfigError(f"layout references unknown feature {metric}.{stat}") from None
        values = np.array([f.features[col] for f in feats], dtype=np.float64)
        if layout.rank_order:
            values = np.sort(values)[::-1]
        segment = np.full(slots, np.nan)
        take = min(slots, values.size)
        segment[:take] = values[:take]
        pieces.append(segment)
    return LogVector(values=np.concatenate(pieces) if pieces else np.zeros(0), layout=layout)


@dataclass
class NormStats:
    """Per-coordinate z-score statistics fitted on the training split."""

    mean: np.ndarray
    std: np.ndarray

    @staticmethod
    def fit(matrix: np.ndarray) -> "NormStats":
        mean = np.nanmean(matrix, axis=0)
        std = np.nanstd(matrix, axis=0)
        mean = np.where(np.isnan(mean), 0.0, mean)
        std = np.where(np.isnan(std), 0.0, std)
        return NormStats(mean=mean, std=std)


def normalize(vector: LogVector, stats: NormStats) -> LogVector:
    """Z-score each coordinate; zero-variance coordinates and pads map to 0."""

    if stats is None:
        raise ConfigError("normalization statistics are required")
    if stats.mean.shape != vector.values.shape:
        raise ConfigError(
            f"normalization stats cover {stats.mean.shape[0]} coordinates, vector has {vector.values.shape[0]}"
        )
    safe_std = np.where(stats.std > 1e-12, stats.std, 1.0)
    z = (vector.values - stats.mean) / safe_std
    z = np.where(stats.std > 1e-12, z, 0.0)
    z = np.where(np.isnan(z), 0.0, z)
    return LogVector(values=z, layout=vector.layout)
