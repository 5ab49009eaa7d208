import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from queryscout.cli import cli, main


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def config_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "gen.json"
    path.write_text(
        json.dumps(
            {
                "n_services": 5,
                "n_faults": 10,
                "reports_per_fault": 4,
                "seed": 33,
                "duration_s": 20.0,
                "generalize_fraction": 0.1,
            }
        )
    )
    return path


@pytest.fixture(scope="module")
def dataset_dir(runner, config_file, tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "ds"
    result = runner.invoke(cli, ["gen-data", "--config", str(config_file), "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture(scope="module")
def bundle_path(runner, dataset_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("models") / "bundle.qsb"
    result = runner.invoke(
        cli,
        ["train", "--dataset", str(dataset_dir), "--out", str(out), "--epochs", "3", "--patience", "3", "--quiet"],
    )
    assert result.exit_code == 0, result.output
    return out


class TestGenData:
    def test_reports_split_counts(self, runner, dataset_dir):
        manifest = json.loads((dataset_dir / "manifest.json").read_text())
        assert manifest["n_scenarios"] == 40
        assert sum(manifest["splits"].values()) == 40

    def test_same_seed_byte_identical(self, runner, config_file, tmp_path_factory):
        out_a = tmp_path_factory.mktemp("rep") / "a"
        out_b = tmp_path_factory.mktemp("rep") / "b"
        for out in (out_a, out_b):
            result = runner.invoke(cli, ["gen-data", "--config", str(config_file), "--out", str(out)])
            assert result.exit_code == 0, result.output
        assert (out_a / "dataset.jsonl").read_bytes() == (out_b / "dataset.jsonl").read_bytes()

    def test_seed_flag_overrides(self, runner, config_file, tmp_path_factory):
        out = tmp_path_factory.mktemp("seed") / "c"
        result = runner.invoke(cli, ["gen-data", "--config", str(config_file), "--out", str(out), "--seed", "99"])
        assert result.exit_code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["seed"] == 99


class TestTrainEval:
    def test_eval_emits_metrics_json(self, runner, bundle_path, dataset_dir):
        result = runner.invoke(
            cli, ["eval", "--bundle", str(bundle_path), "--dataset", str(dataset_dir), "--split", "test_repeat"]
        )
        assert result.exit_code == 0, result.output
        metrics = json.loads(result.output)
        assert "test_repeat" in metrics
        assert set(metrics["test_repeat"]) >= {"n", "avg_rank", "top"}

    def test_unknown_ablation_is_usage_style_error(self, runner, dataset_dir, tmp_path):
        code = main(
            [
                "train",
                "--dataset",
                str(dataset_dir),
                "--out",
                str(tmp_path / "x.qsb"),
                "--ablation",
                "bogus-mode",
            ]
        )
        assert code == 2  # data/config error


class TestPredictExec:
    def scenario_id(self, dataset_dir):
        line = Path(dataset_dir, "dataset.jsonl").read_text().splitlines()[0]
        return json.loads(line)["id"]

    def test_predict_prints_k_lines(self, runner, bundle_path, dataset_dir):
        sid = self.scenario_id(dataset_dir)
        result = runner.invoke(
            cli,
            ["predict", "--bundle", str(bundle_path), "--dataset", str(dataset_dir), "--scenario", sid, "-k", "3"],
        )
        assert result.exit_code == 0, result.output
        lines = [l for l in result.output.splitlines() if l.strip()]
        assert len(lines) == 3
        assert lines[0].startswith("1.")

    def test_exec_renders_table_and_json(self, runner, dataset_dir):
        sid = self.scenario_id(dataset_dir)
        result = runner.invoke(
            cli,
            ["exec", "--dataset", str(dataset_dir), "--scenario", sid, "--query", "SELECT span FROM spans", "--json"],
        )
        assert result.exit_code == 0, result.output
        body = json.loads(result.output)
        assert body["columns"][0] == "name"

        plain = runner.invoke(
            cli, ["exec", "--dataset", str(dataset_dir), "--scenario", sid, "--query", "SELECT span FROM spans"]
        )
        assert plain.exit_code == 0
        assert "rows]" in plain.output

    def test_cli_output_matches_library(self, runner, bundle_path, dataset_dir):
        from queryscout.faultlab import load_dataset
        from queryscout.ranker import BundleScorer, load_bundle, prepare_inputs

        sid = self.scenario_id(dataset_dir)
        result = runner.invoke(
            cli,
            ["predict", "--bundle", str(bundle_path), "--dataset", str(dataset_dir), "--scenario", sid, "-k", "2"],
        )
        bundle = load_bundle(bundle_path)
        dataset = load_dataset(dataset_dir)
        scenario = next(s for s in dataset.scenarios if s.id == sid)
        ranked = BundleScorer(bundle).predict(prepare_inputs(scenario, bundle.featurizer, bundle.catalog), k=2)
        expected = "".join(
            f"{q.rank}. [{q.dialect}] p={q.probability:.4f}  {q.text}\n" for q in ranked.queries
        )
        assert result.output == expected


class TestExitCodes:
    def test_usage_error_is_1(self):
        assert main(["predict", "--bundle"]) == 1

    def test_unknown_scenario_is_2(self, dataset_dir, bundle_path):
        code = main(
            [
                "predict",
                "--bundle",
                str(bundle_path),
                "--dataset",
                str(dataset_dir),
                "--scenario",
                "s9999",
                "-k",
                "1",
            ]
        )
        assert code == 2

    def test_success_is_0(self, dataset_dir):
        line = Path(dataset_dir, "dataset.jsonl").read_text().splitlines()[0]
        sid = json.loads(line)["id"]
        code = main(["exec", "--dataset", str(dataset_dir), "--scenario", sid, "--query", "SELECT span FROM spans"])
        assert code == 0
