"""Operator command line: dataset generation, training, evaluation,
prediction, query execution, and serving the HTTP API.

Exit codes: 0 success, 1 usage error, 2 data/model error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import QueryscoutError


@click.group()
def cli():
    """Rank executable debugging queries from user reports and system logs."""


@cli.command("gen-data")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file overriding dataset-generation fields.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--seed", type=int, default=None, help="Overrides the config seed.")
def gen_data(config_path, out_dir, seed):
    """Generate a labeled scenario dataset (JSONL + manifest)."""

    from .faultlab import DatasetConfig, generate_dataset, save_dataset

    overrides = {}
    if config_path:
        overrides = json.loads(Path(config_path).read_text())
    if seed is not None:
        overrides["seed"] = seed
    config = DatasetConfig(**overrides)
    dataset = generate_dataset(config)
    save_dataset(dataset, out_dir)
    click.echo(json.dumps({"out": str(out_dir), "n_scenarios": len(dataset.scenarios), "splits": dataset.split_counts()}))


@cli.command("train")
@click.option("--dataset", "dataset_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--out", "bundle_path", type=click.Path(dir_okay=False), required=True)
@click.option("--ablation", default=None,
              help="exclude-report | no-rank-order | monolithic | classifier | single-tool=<dialect> | drop-feature=<metric>")
@click.option("--seed", type=int, default=0)
@click.option("--epochs", type=int, default=50)
@click.option("--patience", type=int, default=10)
@click.option("--quiet", is_flag=True, default=False)
def train(dataset_dir, bundle_path, ablation, seed, epochs, patience, quiet):
    """Train a model bundle on a dataset's train split."""

    from .faultlab import load_dataset
    from .ranker import save_bundle, train_bundle
    from .ranker.ablations import config_with_ablation

    dataset = load_dataset(dataset_dir)
    config = config_with_ablation(ablation, seed=seed, epochs=epochs, patience=patience)
    log = (lambda msg: None) if quiet else (lambda msg: click.echo(msg, err=True))
    bundle = train_bundle(dataset, config, log=log)
    save_bundle(bundle, bundle_path)
    click.echo(json.dumps({"bundle": str(bundle_path), "model_type": bundle.model_type,
                           "catalog_size": len(bundle.catalog), "history": {k: v.get("best") for k, v in bundle.history.items() if isinstance(v, dict)}}))


@cli.command("eval")
@click.option("--bundle", "bundle_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--dataset", "dataset_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--split", type=click.Choice(["train", "val", "test_repeat", "test_generalize", "all"]), default="all")
def eval_cmd(bundle_path, dataset_dir, split):
    """Rank/top-k metrics for a trained bundle on a dataset split."""

    from .faultlab import load_dataset
    from .ranker import evaluate, load_bundle
    from .ranker.features import scenarios_for_tool

    bundle = load_bundle(bundle_path)
    dataset = load_dataset(dataset_dir)
    scenarios = scenarios_for_tool(dataset.scenarios, bundle.config.single_tool)
    splits = None if split == "all" else (split,)
    metrics = evaluate(bundle, scenarios, splits=splits)
    click.echo(json.dumps(metrics, indent=2))


@cli.command("predict")
@click.option("--bundle", "bundle_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--dataset", "dataset_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--scenario", "scenario_id", required=True)
@click.option("-k", type=int, default=5)
@click.option("--report", "report_text", default=None, help="Override the stored report text.")
def predict(bundle_path, dataset_dir, scenario_id, k, report_text):
    """Print the ranked top-k queries for a scenario."""

    from .faultlab import load_dataset
    from .ranker import BundleScorer, inputs_from_store, load_bundle, prepare_inputs

    bundle = load_bundle(bundle_path)
    dataset = load_dataset(dataset_dir)
    scenario = _find_scenario(dataset, scenario_id)
    scorer = BundleScorer(bundle)
    if report_text is not None:
        si = inputs_from_store(bundle, scenario.store, report_text)
    else:
        si = prepare_inputs(scenario, bundle.featurizer, bundle.catalog)
    ranked = scorer.predict(si, k=k)
    for q in ranked.queries:
        click.echo(f"{q.rank}. [{q.dialect}] p={q.probability:.4f}  {q.text}")


@cli.command("exec")
@click.option("--dataset", "dataset_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--scenario", "scenario_id", required=True)
@click.option("--query", "query_text", required=True)
@click.option("--json", "as_json", is_flag=True, default=False)
def exec_cmd(dataset_dir, scenario_id, query_text, as_json):
    """Execute a query against a scenario's stored logs."""

    from .dsl import detect_dialect, parse_query
    from .faultlab import load_dataset
    from .queryexec import execute, render_table

    dataset = load_dataset(dataset_dir)
    scenario = _find_scenario(dataset, scenario_id)
    ast = parse_query(query_text, detect_dialect(query_text))
    table = execute(ast, scenario.store, scenario_id=scenario_id)
    if as_json:
        click.echo(json.dumps({"columns": table.columns, "rows": table.rows}))
    else:
        click.echo(render_table(table))


@cli.command("serve")
@click.option("--data-dir", type=click.Path(file_okay=False), required=True)
@click.option("--addr", default="127.0.0.1:8000", help="host:port to listen on.")
@click.option("--ui-dir", type=click.Path(file_okay=False), default=None)
def serve(data_dir, addr, ui_dir):
    """Run the HTTP API (and static UI when built assets exist)."""

    import uvicorn

    from .service import create_app

    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise click.UsageError(f"--addr must be host:port, got {addr!r}")
    app = create_app(data_dir, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=int(port), log_level="info")


def _find_scenario(dataset, scenario_id: str):
    for scenario in dataset.scenarios:
        if scenario.id == scenario_id:
            return scenario
    raise QueryscoutError(f"scenario {scenario_id!r} not found in dataset")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.Abort:
        return 1
    except QueryscoutError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
