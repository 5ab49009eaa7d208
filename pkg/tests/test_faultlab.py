import collections
import json

import numpy as np
import pytest

from queryscout.dsl import Dialect, extract_template, parse_query, render_query, render_template
from queryscout.errors import ConfigError, FaultError
from queryscout.faultlab import (
    CATEGORIES,
    DatasetConfig,
    FaultSpec,
    TICKET_MIX,
    Workload,
    build_topology,
    canonical_templates,
    default_app_spec,
    generate_dataset,
    ground_truth_query,
    inject_fault,
    load_dataset,
    save_dataset,
    scenario_to_json,
    simulate,
    split_sizes,
    synthesize_report,
)
from queryscout.telemetry import feature_names, featurize


@pytest.fixture(scope="module")
def topo():
    return build_topology(default_app_spec(6), seed=7)


def run(topo, fault, seed=5, duration=25.0, rate=1.0):
    world = inject_fault(topo, fault)
    return simulate(world, Workload(rate_per_s=rate, duration_s=duration, benign_anomaly_rate=0.0), seed)


def switch_packet_counts(store):
    return {log.switch_id: log.packets.shape[0] for log in store.switches}


class TestTopology:
    def test_two_service_counts(self):
        t = build_topology(default_app_spec(2), seed=0)
        assert len(t.switch_ids()) == 5  # router + 2 per service
        assert len(t.host_ids()) == 2

    def test_fourteen_service_node_count(self):
        t = build_topology(default_app_spec(14), seed=0)
        assert len(t.switch_ids()) == 29

    def test_deterministic(self):
        a = build_topology(default_app_spec(5), seed=3)
        b = build_topology(default_app_spec(5), seed=3)
        assert a == b

    def test_seed_changes_functions(self):
        a = build_topology(default_app_spec(5), seed=3)
        b = build_topology(default_app_spec(5), seed=4)
        assert a.function_names() != b.function_names()

    def test_too_few_services_rejected(self):
        with pytest.raises(ConfigError):
            default_app_spec(1)

    def test_switch_ownership(self, topo):
        svc = topo.services[2]
        assert topo.service_for_switch(svc.edge_switch) == svc
        assert topo.service_for_switch(svc.core_switch) == svc
        assert topo.service_for_switch(0) is None


class TestInjection:
    def test_kind_mismatch_rejected(self, topo):
        with pytest.raises(FaultError):
            inject_fault(topo, FaultSpec("component_failure", location=3))  # switch id, not service
        with pytest.raises(FaultError):
            inject_fault(topo, FaultSpec("network_congestion", location="cart"))
        with pytest.raises(FaultError):
            inject_fault(topo, FaultSpec("source_code_bug", location="no_such_fn"))

    def test_underprovisioning_needs_resource(self, topo):
        with pytest.raises(FaultError):
            inject_fault(topo, FaultSpec("resource_underprovisioning", location="cart", magnitude=1.0))

    def test_router_not_a_fault_location(self, topo):
        with pytest.raises(FaultError):
            inject_fault(topo, FaultSpec("network_congestion", location=0))


class TestSignatures:
    def test_component_failure_kills_edge_switch(self, topo):
        svc = topo.services[2]
        store = run(topo, FaultSpec("component_failure", location=svc.name))
        counts = switch_packet_counts(store)
        assert counts[svc.edge_switch] == 0
        others = [c for sid, c in counts.items() if sid != svc.edge_switch and sid != svc.core_switch]
        assert min(others) > 0
        # container is dead and its functions leave no spans
        host = [c for c in store.containers if c.host_id == svc.host_id][0]
        assert float(np.mean(host.samples[:, 1])) < 0.02
        assert all(s.name not in svc.functions for s in store.spans)

    def test_cpu_underprovisioning_pins_cpu_and_slows_functions(self, topo):
        svc = topo.services[3]
        fault = FaultSpec("resource_underprovisioning", location=svc.name, magnitude={"resource": "cpu", "severity": 1.0})
        store = run(topo, fault)
        baseline = run(topo, None)
        host = [c for c in store.containers if c.host_id == svc.host_id][0]
        assert float(np.mean(host.samples[:, 1])) > 0.95
        dur = np.mean([s.duration_ms for s in store.spans if s.name == svc.entry_function])
        dur0 = np.mean([s.duration_ms for s in baseline.spans if s.name == svc.entry_function])
        assert dur > 1.8 * dur0

    def test_congestion_inflates_queue(self, topo):
        switch = topo.services[1].edge_switch
        store = run(topo, FaultSpec("network_congestion", location=switch))
        baseline = run(topo, None)
        q_f = [log for log in store.switches if log.switch_id == switch][0].packets[:, 6].mean()
        q_b = [log for log in baseline.switches if log.switch_id == switch][0].packets[:, 6].mean()
        assert q_f > q_b + 3

    def test_misconfig_starves_switch(self, topo):
        switch = topo.services[4].core_switch
        store = run(topo, FaultSpec("network_misconfiguration", location=switch))
        baseline = run(topo, None)
        assert switch_packet_counts(store)[switch] < 0.3 * switch_packet_counts(baseline)[switch]

    def test_bug_drops_variable_count(self, topo):
        fn = topo.services[2].functions[1]
        store = run(topo, FaultSpec("source_code_bug", location=fn))
        vars_faulty = np.mean([s.variable_count for s in store.spans if s.name == fn])
        vars_other = np.mean([s.variable_count for s in store.spans if s.name != fn])
        assert vars_faulty < 2.0 < vars_other

    def test_data_exchange_raises_exceptions(self, topo):
        fn = topo.services[3].entry_function
        store = run(topo, FaultSpec("incorrect_data_exchange", location=fn))
        exc = [s.exception_count for s in store.spans if s.name == fn]
        assert min(exc) >= 1
        others = [s.exception_count for s in store.spans if s.name != fn]
        assert max(others) == 0

    def test_subsystem_misconfig_errors_entry_function(self, topo):
        svc = topo.services[5]
        store = run(topo, FaultSpec("subsystem_misconfiguration", location=svc.name))
        entry_spans = [s for s in store.spans if s.name == svc.entry_function]
        assert np.mean([s.error for s in entry_spans]) > 0.7
        assert np.mean([s.exception_count for s in entry_spans]) >= 1.0

    def test_no_fault_baseline_nominal(self, topo):
        store = run(topo, None)
        assert min(switch_packet_counts(store).values()) > 0
        for c in store.containers:
            assert 0.0 < float(np.mean(c.samples[:, 1])) < 0.9
        assert all(s.exception_count == 0 for s in store.spans)
        assert not any(s.error for s in store.spans)

    def test_zero_rate_means_zero_packets(self, topo):
        store = run(topo, None, rate=0.0)
        assert all(c == 0 for c in switch_packet_counts(store).values())

    def test_deterministic_for_seed(self, topo):
        fault = FaultSpec("network_congestion", location=topo.services[1].edge_switch)
        a = run(topo, fault, seed=9)
        b = run(topo, fault, seed=9)
        assert json.dumps(_store_digest(a)) == json.dumps(_store_digest(b))

    def test_two_seeds_same_signature(self, topo):
        svc = topo.services[2]
        for seed in (1, 2):
            store = run(topo, FaultSpec("component_failure", location=svc.name), seed=seed)
            counts = switch_packet_counts(store)
            assert counts[svc.edge_switch] == 0
            assert min(counts[s] for s in counts if s != svc.edge_switch) != counts[svc.edge_switch]

    def test_failure_switch_is_global_min_on_packets(self, topo):
        svc = topo.services[1]
        store = run(topo, FaultSpec("component_failure", location=svc.name))
        feats = [f for f in featurize(store) if f.kind == "switch"]
        col = feature_names("switch").index("packet_count.mean")
        worst = min(feats, key=lambda f: f.features[col])
        assert worst.subsystem_id == svc.edge_switch


def _store_digest(store):
    return {
        "pkts": {log.switch_id: np.asarray(log.packets).tolist() for log in store.switches},
        "spans": [[s.name, s.time, s.duration_ms, s.variable_count, s.exception_count, s.error] for s in store.spans],
        "cont": {c.host_id: np.asarray(c.samples).tolist() for c in store.containers},
    }


class TestReports:
    def test_symptom_class_per_category(self):
        fault = FaultSpec("component_failure", location="cart")
        report = synthesize_report(fault, seed=1)
        assert report.choices["missing_content"]
        assert not report.choices["slow_load"]

        slow = synthesize_report(FaultSpec("network_congestion", location=3), seed=2)
        assert slow.choices["slow_load"]

    def test_deterministic(self):
        fault = FaultSpec("source_code_bug", location="fn")
        assert synthesize_report(fault, 7) == synthesize_report(fault, 7)

    def test_seeds_vary_text(self):
        fault = FaultSpec("source_code_bug", location="fn")
        texts = {synthesize_report(fault, seed).text for seed in range(12)}
        assert len(texts) > 4

    def test_text_nonempty_and_flag_set(self):
        for category in CATEGORIES:
            fault = FaultSpec(category, location="x", magnitude={"resource": "cpu", "severity": 1})
            report = synthesize_report(fault, 3)
            assert report.text.strip()
            assert any(report.choices.values())

    def test_bank_sizes(self):
        from queryscout.faultlab.reports import SYMPTOM_BANKS

        for bank in SYMPTOM_BANKS.values():
            assert len(bank) >= 8


class TestGroundTruth:
    def test_network_misconfiguration_query(self, topo):
        fault = FaultSpec("network_misconfiguration", location=3)
        assert (
            render_query(ground_truth_query(fault, topo))
            == "stream = filter(T, switch==3); result = groupby(stream, [5-tuple], count);"
        )

    def test_cpu_underprovisioning_query(self, topo):
        svc = topo.services[0]
        fault = FaultSpec(
            "resource_underprovisioning", location=svc.name, magnitude={"resource": "cpu", "severity": 1.0}
        )
        assert render_query(ground_truth_query(fault, topo)) == f'SELECT * FROM cpu_usage WHERE host="{svc.host_id}"'

    def test_source_bug_query(self, topo):
        fn = topo.services[1].functions[1]
        fault = FaultSpec("source_code_bug", location=fn)
        assert render_query(ground_truth_query(fault, topo)) == f'SELECT span FROM spans WHERE name="{fn}"'

    def test_every_category_parses_and_matches_bank(self, topo):
        bank_texts = {render_template(t) for t in canonical_templates()}
        examples = {
            "resource_underprovisioning": FaultSpec(
                "resource_underprovisioning", "cart", {"resource": "disk", "severity": 1.0}
            ),
            "component_failure": FaultSpec("component_failure", "cart"),
            "subsystem_misconfiguration": FaultSpec("subsystem_misconfiguration", "cart"),
            "network_congestion": FaultSpec("network_congestion", topo.services[2].edge_switch),
            "network_misconfiguration": FaultSpec("network_misconfiguration", topo.services[2].core_switch),
            "source_code_bug": FaultSpec("source_code_bug", topo.services[2].functions[1]),
            "incorrect_data_exchange": FaultSpec("incorrect_data_exchange", topo.services[2].entry_function),
        }
        assert set(examples) == set(CATEGORIES)
        for fault in examples.values():
            ast = ground_truth_query(fault, topo)
            rendered = render_query(ast)
            reparsed = parse_query(rendered, ast.dialect)
            assert reparsed == ast
            template, _ = extract_template(ast)
            assert render_template(template) in bank_texts


class TestDataset:
    @pytest.fixture(scope="class")
    def small(self):
        return generate_dataset(DatasetConfig(n_services=6, n_faults=14, reports_per_fault=5, seed=21, duration_s=20))

    def test_split_sizes_exact(self):
        assert split_sizes(100) == (53, 13, 34)
        assert split_sizes(600) == (318, 78, 204)

    def test_split_counts(self, small):
        counts = small.split_counts()
        assert counts["train"] == 37  # round(70 * 0.53)
        assert counts["val"] == 9
        assert counts["train"] + counts["val"] + counts["test_repeat"] + counts["test_generalize"] == 70

    def test_repeat_queries_seen_in_training(self, small):
        train_queries = {s.ground_truth for s in small.by_split("train")}
        for s in small.by_split("test_repeat"):
            assert s.ground_truth in train_queries

    def test_generalize_templates_seen_params_unseen(self, small):
        train_by_template = collections.defaultdict(set)
        for s in small.by_split("train"):
            template, params = extract_template(s.ground_truth_ast)
            train_by_template[render_template(template)].add(params.values)
        for s in small.by_split("test_generalize"):
            template, params = extract_template(s.ground_truth_ast)
            text = render_template(template)
            assert text in train_by_template
            assert params.values not in train_by_template[text]

    def test_single_split_per_scenario(self, small):
        assert len({s.id for s in small.scenarios}) == len(small.scenarios)

    def test_fault_mix_follows_default_ratios(self, small):
        by_cat = collections.Counter(s.fault.category for s in small.scenarios)
        total_tickets = sum(TICKET_MIX.values())
        for category, count in by_cat.items():
            expected = 14 * TICKET_MIX[category] / total_tickets
            assert abs(count / 5 - expected) <= 2

    def test_ground_truths_parse(self, small):
        for s in small.scenarios[::7]:
            assert render_query(s.ground_truth_ast) == s.ground_truth

    def test_save_load_round_trip(self, small, tmp_path):
        save_dataset(small, tmp_path / "ds")
        loaded = load_dataset(tmp_path / "ds")
        assert len(loaded.scenarios) == len(small.scenarios)
        for a, b in zip(small.scenarios, loaded.scenarios):
            assert json.dumps(scenario_to_json(a), sort_keys=True) == json.dumps(scenario_to_json(b), sort_keys=True)

    def test_byte_identical_regeneration(self, tmp_path):
        config = DatasetConfig(
            n_services=4, n_faults=8, reports_per_fault=3, seed=5, duration_s=15, generalize_fraction=0.1
        )
        save_dataset(generate_dataset(config), tmp_path / "a")
        save_dataset(generate_dataset(config), tmp_path / "b")
        assert (tmp_path / "a" / "dataset.jsonl").read_bytes() == (tmp_path / "b" / "dataset.jsonl").read_bytes()

    def test_infeasible_config_rejected(self):
        with pytest.raises(ConfigError):
            generate_dataset(DatasetConfig(n_faults=3))
        with pytest.raises(ConfigError):
            generate_dataset(DatasetConfig(n_services=6, n_faults=14, reports_per_fault=5, generalize_fraction=0.9))
