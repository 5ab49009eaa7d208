"""Fault-scenario lab: topology, injection, simulation, labeled datasets."""

from .topology import AppSpec, Service, Topology, build_topology, default_app_spec
from .faults import (
    CATEGORIES,
    LOCATION_KIND,
    TICKET_MIX,
    FaultSpec,
    FaultyWorld,
    inject_fault,
)
from .simulate import Workload, simulate
from .reports import UserReport, synthesize_report
from .groundtruth import TEMPLATE_BANK, canonical_templates, ground_truth_query, template_by_name
from .dataset import (
    Dataset,
    DatasetConfig,
    SPLITS,
    Scenario,
    generate_dataset,
    load_dataset,
    save_dataset,
    scenario_from_json,
    scenario_to_json,
    split_sizes,
)

__all__ = [
    "AppSpec",
    "Service",
    "Topology",
    "build_topology",
    "default_app_spec",
    "CATEGORIES",
    "LOCATION_KIND",
    "TICKET_MIX",
    "FaultSpec",
    "FaultyWorld",
    "inject_fault",
    "Workload",
    "simulate",
    "UserReport",
    "synthesize_report",
    "TEMPLATE_BANK",
    "canonical_templates",
    "ground_truth_query",
    "template_by_name",
    "Dataset",
    "DatasetConfig",
    "SPLITS",
    "Scenario",
    "generate_dataset",
    "load_dataset",
    "save_dataset",
    "scenario_from_json",
    "scenario_to_json",
    "split_sizes",
]
