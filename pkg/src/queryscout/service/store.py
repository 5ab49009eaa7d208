"""Filesystem-backed state for the service.

Datasets and model bundles live in per-id directories; sessions are an
append-only JSONL event log. Everything is rebuilt into an in-memory
index at startup, so a restart reproduces identical state.
"""

from __future__ import annotations

import json
import threading
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError, QueryscoutError
from ..faultlab import Dataset, DatasetConfig, Scenario, generate_dataset, load_dataset, save_dataset
from ..ranker import ModelBundle, evaluate, load_bundle, save_bundle, train_bundle
from ..ranker.ablations import config_with_ablation


class NotFound(QueryscoutError):
    pass


class Busy(QueryscoutError):
    pass


@dataclass
class ModelMeta:
    model_id: str
    dataset_id: str
    status: str  # queued | running | done | failed
    ablation: str | None = None
    seed: int = 0
    epochs: int = 50
    patience: int = 10
    metrics: dict | None = None
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "model_id": self.model_id,
            "dataset_id": self.dataset_id,
            "status": self.status,
            "ablation": self.ablation,
            "seed": self.seed,
            "epochs": self.epochs,
            "patience": self.patience,
            "metrics": self.metrics,
            "error": self.error,
        }

    @staticmethod
    def from_json(obj: dict) -> "ModelMeta":
        return ModelMeta(**obj)


@dataclass
class Session:
    session_id: str
    dataset_id: str
    scenario_id: str
    report_text: str | None = None
    predictions: list[dict] = field(default_factory=list)
    executed: list[dict] = field(default_factory=list)
    verdict_index: int | None = None
    created_at: float = 0.0
    updated_at: float = 0.0

    def to_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "dataset_id": self.dataset_id,
            "scenario_id": self.scenario_id,
            "report_text": self.report_text,
            "predictions": self.predictions,
            "executed": self.executed,
            "verdict_index": self.verdict_index,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }


class DataStore:
    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        (self.root / "datasets").mkdir(parents=True, exist_ok=True)
        (self.root / "models").mkdir(parents=True, exist_ok=True)
        self._datasets: dict[str, Dataset] = {}
        self._bundles: dict[str, ModelBundle] = {}
        self._models: dict[str, ModelMeta] = {}
        self._sessions: dict[str, Session] = {}
        self._train_lock = threading.Lock()
        self._io_lock = threading.Lock()
        self._load_models()
        self._replay_sessions()

    # ids ---------------------------------------------------------------

    def _next_id(self, prefix: str, existing) -> str:
        n = 1
        taken = set(existing)
        while f"{prefix}{n:04d}" in taken:
            n += 1
        return f"{prefix}{n:04d}"

    # datasets ----------------------------------------------------------

    def dataset_ids(self) -> list[str]:
        return sorted(p.name for p in (self.root / "datasets").iterdir() if p.is_dir())

    def create_dataset(self, config: DatasetConfig) -> Dataset:
        dataset = generate_dataset(config)
        dataset_id = self._next_id("ds", self.dataset_ids())
        save_dataset(dataset, self.root / "datasets" / dataset_id)
        self._datasets[dataset_id] = dataset
        return_id = dataset_id
        dataset.dataset_id = return_id  # type: ignore[attr-defined]
        return dataset

    def get_dataset(self, dataset_id: str) -> Dataset:
        if dataset_id in self._datasets:
            return self._datasets[dataset_id]
        path = self.root / "datasets" / dataset_id
        if not path.is_dir():
            raise NotFound(f"dataset {dataset_id!r} does not exist")
        dataset = load_dataset(path)
        dataset.dataset_id = dataset_id  # type: ignore[attr-defined]
        self._datasets[dataset_id] = dataset
        return dataset

    def get_scenario(self, dataset_id: str, scenario_id: str) -> Scenario:
        dataset = self.get_dataset(dataset_id)
        for scenario in dataset.scenarios:
            if scenario.id == scenario_id:
                return scenario
        raise NotFound(f"scenario {scenario_id!r} not in dataset {dataset_id!r}")

    # models --------------------------------------------------------------

    def _model_dir(self, model_id: str) -> Path:
        return self.root / "models" / model_id

    def _load_models(self) -> None:
        for path in sorted((self.root / "models").iterdir()) if (self.root / "models").exists() else []:
            meta_path = path / "meta.json"
            if meta_path.exists():
                meta = ModelMeta.from_json(json.loads(meta_path.read_text()))
                if meta.status in ("queued", "running"):
                    meta.status = "failed"
                    meta.error = "interrupted by restart"
                self._models[meta.model_id] = meta

    def _write_meta(self, meta: ModelMeta) -> None:
        with self._io_lock:
            path = self._model_dir(meta.model_id)
            path.mkdir(parents=True, exist_ok=True)
            (path / "meta.json").write_text(json.dumps(meta.to_json(), indent=2) + "\n")

    def model_meta(self, model_id: str) -> ModelMeta:
        if model_id not in self._models:
            raise NotFound(f"model {model_id!r} does not exist")
        return self._models[model_id]

    def start_training(self, dataset_id: str, seed: int, epochs: int, patience: int, ablation: str | None) -> ModelMeta:
        dataset = self.get_dataset(dataset_id)
        if not self._train_lock.acquire(blocking=False):
            raise Busy("a training job is already running")
        try:
            model_id = self._next_id("m", self._models)
            meta = ModelMeta(
                model_id=model_id,
                dataset_id=dataset_id,
                status="queued",
                ablation=ablation,
                seed=seed,
                epochs=epochs,
                patience=patience,
            )
            self._models[model_id] = meta
            self._write_meta(meta)
            thread = threading.Thread(target=self._run_training, args=(meta, dataset), daemon=True)
            thread.start()
            return meta
        except Exception:
            self._train_lock.release()
            raise

    def _run_training(self, meta: ModelMeta, dataset: Dataset) -> None:
        try:
            meta.status = "running"
            self._write_meta(meta)
            config = config_with_ablation(
                meta.ablation, seed=meta.seed, epochs=meta.epochs, patience=meta.patience
            )
            bundle = train_bundle(dataset, config)
            save_bundle(bundle, self._model_dir(meta.model_id) / "bundle.qsb")
            meta.metrics = evaluate(bundle, dataset.scenarios)
            meta.status = "done"
            self._bundles[meta.model_id] = bundle
        except Exception as exc:  # surfaced through model status
            meta.status = "failed"
            meta.error = f"{type(exc).__name__}: {exc}"
            traceback.print_exc()
        finally:
            self._write_meta(meta)
            self._train_lock.release()

    def get_bundle(self, model_id: str) -> ModelBundle:
        meta = self.model_meta(model_id)
        if meta.status != "done":
            raise ConfigError(f"model {model_id!r} is not trained (status: {meta.status})")
        if model_id not in self._bundles:
            self._bundles[model_id] = load_bundle(self._model_dir(model_id) / "bundle.qsb")
        return self._bundles[model_id]

    # sessions ------------------------------------------------------------

    @property
    def _sessions_path(self) -> Path:
        return self.root / "sessions.jsonl"

    def _replay_sessions(self) -> None:
        if not self._sessions_path.exists():
            return
        with open(self._sessions_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                event = json.loads(line)
                if event["type"] == "created":
                    data = event["session"]
                    self._sessions[data["session_id"]] = Session(**data)
                elif event["type"] == "patched":
                    session = self._sessions.get(event["session_id"])
                    if session is not None:
                        self._apply_patch(session, event["patch"], event["timestamp"])

    def _append_event(self, event: dict) -> None:
        with self._io_lock:
            with open(self._sessions_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, separators=(",", ":")) + "\n")

    def create_session(self, dataset_id: str, scenario_id: str, report_text: str | None) -> Session:
        self.get_scenario(dataset_id, scenario_id)  # 404 on bad ids
        now = time.time()
        session = Session(
            session_id=self._next_id("sess", self._sessions),
            dataset_id=dataset_id,
            scenario_id=scenario_id,
            report_text=report_text,
            created_at=now,
            updated_at=now,
        )
        self._sessions[session.session_id] = session
        self._append_event({"type": "created", "session": session.to_json()})
        return session

    def get_session(self, session_id: str) -> Session:
        if session_id not in self._sessions:
            raise NotFound(f"session {session_id!r} does not exist")
        return self._sessions[session_id]

    def patch_session(self, session_id: str, patch: dict) -> Session:
        session = self.get_session(session_id)
        now = max(time.time(), session.updated_at)  # timestamps stay monotone
        self._apply_patch(session, patch, now)
        self._append_event({"type": "patched", "session_id": session_id, "patch": patch, "timestamp": now})
        return session

    @staticmethod
    def _apply_patch(session: Session, patch: dict, timestamp: float) -> None:
        if patch.get("predictions") is not None:
            session.predictions = patch["predictions"]
        if patch.get("executed_query") is not None:
            session.executed.append({"query": patch["executed_query"], "timestamp": timestamp})
        if "verdict_index" in patch and patch["verdict_index"] is not None:
            session.verdict_index = patch["verdict_index"]
        session.updated_at = timestamp
