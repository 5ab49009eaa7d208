import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from queryscout.errors import ConfigError
from queryscout.telemetry import (
    ContainerLog,
    LogLayout,
    NormStats,
    SpanRecord,
    SwitchLog,
    TelemetryStore,
    build_log_vector,
    empty_packets,
    feature_names,
    featurize,
    normalize,
)


def packets_with_qsizes(switch_id, qsizes, t0=0.0):
    rows = [[t0 + 0.1 * i, 1, 2, 40000, 9000, 6, q] for i, q in enumerate(qsizes)]
    return SwitchLog(switch_id=switch_id, packets=np.array(rows, dtype=np.float64))


def store_with_switches(qsizes_by_switch, duration=10.0):
    switches = [packets_with_qsizes(sid, qs) for sid, qs in qsizes_by_switch.items()]
    return TelemetryStore(switches=switches, spans=[], containers=[], functions=[], duration_s=duration)


class TestFeaturize:
    def test_hand_statistics(self):
        store = store_with_switches({1: [2, 4, 6]})
        feats = featurize(store)
        sw = [f for f in feats if f.kind == "switch"][0]
        names = feature_names("switch")
        get = lambda n: sw.features[names.index(n)]
        assert get("queue_depth.mean") == pytest.approx(4.0)
        assert get("queue_depth.max") == 6.0
        assert get("queue_depth.min") == 2.0
        assert get("queue_depth.median") == 4.0

    def test_two_switch_packet_count_ranks(self):
        # 10 vs 50 packets: larger value gets rank 0
        store = store_with_switches({1: [0] * 10, 2: [0] * 50})
        feats = {f.subsystem_id: f for f in featurize(store) if f.kind == "switch"}
        col = feature_names("switch").index("packet_count.mean")
        assert feats[2].ranks[col] == 0.0
        assert feats[1].ranks[col] == 1.0

    def test_stdev_matches_two_pass(self):
        rng = np.random.default_rng(5)
        qsizes = rng.integers(0, 9, size=40).tolist()
        store = store_with_switches({3: qsizes})
        sw = [f for f in featurize(store) if f.kind == "switch"][0]
        col = feature_names("switch").index("queue_depth.stdev")
        mean = sum(qsizes) / len(qsizes)
        var = sum((q - mean) ** 2 for q in qsizes) / len(qsizes)
        assert sw.features[col] == pytest.approx(var**0.5, rel=1e-12)

    def test_absent_subsystem_is_zero_and_flagged(self):
        store = TelemetryStore(
            switches=[SwitchLog(1, empty_packets()), packets_with_qsizes(2, [1, 2])],
            spans=[],
            containers=[],
            functions=["fn_a"],
            duration_s=5.0,
        )
        feats = {(f.kind, f.subsystem_id): f for f in featurize(store)}
        dead = feats[("switch", 1)]
        assert dead.absent and not feats[("switch", 2)].absent
        assert np.all(dead.features == 0.0)
        fn = feats[("function", "fn_a")]
        assert fn.absent and np.all(fn.features == 0.0)

    def test_empty_store_rejected(self):
        with pytest.raises(ConfigError):
            featurize(TelemetryStore())

    def test_rank_consistency_with_value_order(self):
        store = store_with_switches({1: [5] * 3, 2: [9] * 4, 3: [1] * 2})
        feats = [f for f in featurize(store) if f.kind == "switch"]
        col = feature_names("switch").index("queue_depth.mean")
        by_rank = sorted(feats, key=lambda f: f.ranks[col])
        values = [f.features[col] for f in by_rank]
        assert values == sorted(values, reverse=True)

    def test_deterministic(self):
        store = store_with_switches({1: [3, 1], 2: [7]})
        a = featurize(store)
        b = featurize(store)
        for fa, fb in zip(a, b):
            assert np.array_equal(fa.features, fb.features)
            assert np.array_equal(fa.ranks, fb.ranks)


class TestLogVector:
    def layout(self, slots):
        return LogLayout.build({"switch": slots})

    def test_segment_sorted_descending(self):
        store = store_with_switches({10: [5] * 4, 11: [9] * 4, 12: [1] * 4})
        vec = build_log_vector(featurize(store), self.layout(3))
        names = [(m, s) for (k, m, s, n) in vec.layout.segments]
        seg_index = names.index(("queue_depth", "mean"))
        offset = sum(seg[3] for seg in vec.layout.segments[:seg_index])
        assert vec.values[offset : offset + 3].tolist() == [9.0, 5.0, 1.0]

    def test_relabel_invariance(self):
        store_a = store_with_switches({1: [5] * 3, 2: [9] * 5, 3: [1] * 2})
        store_b = store_with_switches({3: [5] * 3, 1: [9] * 5, 2: [1] * 2})
        layout = self.layout(3)
        va = build_log_vector(featurize(store_a), layout)
        vb = build_log_vector(featurize(store_b), layout)
        assert np.array_equal(va.values, vb.values)

    @given(perm=st.permutations(list(range(5))))
    @settings(max_examples=25, deadline=None)
    def test_relabel_invariance_property(self, perm):
        rng = np.random.default_rng(17)
        series = {i: rng.integers(0, 20, size=rng.integers(1, 30)).tolist() for i in range(5)}
        layout = self.layout(5)
        base = build_log_vector(featurize(store_with_switches(series)), layout)
        relabeled = {perm[i]: series[i] for i in range(5)}
        permuted = build_log_vector(featurize(store_with_switches(relabeled)), layout)
        assert np.array_equal(base.values, permuted.values)

    def test_padding_is_nan_before_normalization(self):
        store = store_with_switches({1: [4] * 2, 2: [2] * 2})
        vec = build_log_vector(featurize(store), self.layout(4))
        seg = vec.values[:4]  # first segment: packet_count.min over 4 slots
        assert np.isnan(seg[2]) and np.isnan(seg[3])
        assert not np.isnan(seg[0]) and not np.isnan(seg[1])

    def test_segments_non_increasing(self):
        rng = np.random.default_rng(3)
        series = {i: rng.integers(0, 50, size=20).tolist() for i in range(6)}
        vec = build_log_vector(featurize(store_with_switches(series)), self.layout(6))
        offset = 0
        for _, _, _, slots in vec.layout.segments:
            seg = vec.values[offset : offset + slots]
            seg = seg[~np.isnan(seg)]
            assert np.all(np.diff(seg) <= 1e-12)
            offset += slots


class TestNormalize:
    def test_zscore_properties(self):
        rng = np.random.default_rng(0)
        matrix = rng.normal(size=(50, 8)) * 3 + 1
        stats = NormStats.fit(matrix)
        layout = LogLayout(segments=(("switch", "queue_depth", "mean", 8),))
        normed = np.vstack(
            [normalize(build := type("V", (), {"values": row, "layout": layout})(), stats).values for row in matrix]
        )
        assert np.max(np.abs(normed.mean(axis=0))) < 1e-9
        assert np.allclose(normed.std(axis=0), 1.0, atol=1e-9)

    def test_mean_maps_to_zero_and_one_sigma_to_one(self):
        stats = NormStats(mean=np.array([5.0]), std=np.array([2.0]))
        layout = LogLayout(segments=(("switch", "queue_depth", "mean", 1),))
        from queryscout.telemetry import LogVector

        assert normalize(LogVector(np.array([5.0]), layout), stats).values[0] == 0.0
        assert normalize(LogVector(np.array([7.0]), layout), stats).values[0] == pytest.approx(1.0)

    def test_zero_variance_and_nan_map_to_zero(self):
        stats = NormStats(mean=np.array([5.0, 1.0]), std=np.array([0.0, 1.0]))
        layout = LogLayout(segments=(("switch", "queue_depth", "mean", 2),))
        from queryscout.telemetry import LogVector

        out = normalize(LogVector(np.array([9.0, np.nan]), layout), stats)
        assert out.values.tolist() == [0.0, 0.0]

    def test_missing_stats_rejected(self):
        from queryscout.telemetry import LogVector

        layout = LogLayout(segments=(("switch", "queue_depth", "mean", 1),))
        with pytest.raises(ConfigError):
            normalize(LogVector(np.array([1.0]), layout), None)

    def test_drop_metric_changes_layout(self):
        layout = LogLayout.build({"switch": 3}, drop_metrics=("packet_count",))
        metrics = {seg[1] for seg in layout.segments}
        assert metrics == {"queue_depth"}
