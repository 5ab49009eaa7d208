"""HTTP facade over datasets, training, prediction, execution, sessions."""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from ..dsl import detect_dialect, parse_query
from ..errors import ConfigError, DialectError, ExecutionError, ParseError, QueryscoutError
from ..faultlab import DatasetConfig, SPLITS
from ..queryexec import execute
from ..ranker import BundleScorer, inputs_from_store, prepare_inputs
from ..faultlab.dataset import _store_from_json
from . import schemas
from .store import Busy, DataStore, NotFound


class ApiError(QueryscoutError):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(data_dir: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="queryscout", version="0.1.0")
    store = DataStore(data_dir)
    app.state.store = store

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return _error(exc.status, exc.code, exc.message)

    @app.exception_handler(QueryscoutError)
    async def handle_domain_error(request: Request, exc: QueryscoutError):
        if isinstance(exc, NotFound):
            return _error(404, "not_found", str(exc))
        if isinstance(exc, Busy):
            return _error(409, "busy", str(exc))
        if isinstance(exc, (ParseError, DialectError)):
            return _error(400, "bad_query", str(exc))
        if isinstance(exc, ExecutionError):
            return _error(400, "execution_error", str(exc))
        if isinstance(exc, ConfigError):
            return _error(409, "not_ready", str(exc))
        return _error(400, "bad_request", str(exc))

    # datasets ---------------------------------------------------------------

    @app.post("/datasets", response_model=schemas.DatasetResponse)
    def create_dataset(body: schemas.DatasetRequest):
        config = DatasetConfig(
            n_services=body.n_services,
            n_faults=body.n_faults,
            reports_per_fault=body.reports_per_fault,
            seed=body.seed,
            duration_s=body.duration_s,
            rate_per_s=body.rate_per_s,
            benign_anomaly_rate=body.benign_anomaly_rate,
            generalize_fraction=body.generalize_fraction,
        )
        dataset = store.create_dataset(config)
        return schemas.DatasetResponse(
            dataset_id=dataset.dataset_id,
            n_scenarios=len(dataset.scenarios),
            splits=dataset.split_counts(),
        )

    @app.get("/datasets")
    def list_datasets():
        return {"datasets": store.dataset_ids()}

    @app.get("/datasets/{dataset_id}/scenarios", response_model=list[schemas.ScenarioSummary])
    def list_scenarios(dataset_id: str, split: str | None = Query(default=None)):
        dataset = store.get_dataset(dataset_id)
        if split is not None and split not in SPLITS:
            raise ApiError(400, "bad_split", f"split must be one of {list(SPLITS)}")
        out = []
        for scenario in dataset.scenarios:
            if split is not None and scenario.split != split:
                continue
            out.append(
                schemas.ScenarioSummary(
                    id=scenario.id,
                    split=scenario.split,
                    category=scenario.fault.category,
                    location=str(scenario.fault.location),
                    report_text=scenario.report.text,
                    choices=scenario.report.choices,
                    ground_truth_query=scenario.ground_truth,
                )
            )
        return out

    # models -------------------------------------------------------------------

    @app.post("/models", response_model=schemas.ModelStatus)
    def train_model(body: schemas.TrainRequest):
        meta = store.start_training(
            dataset_id=body.dataset_id,
            seed=body.seed,
            epochs=body.epochs,
            patience=body.patience,
            ablation=body.ablation,
        )
        return schemas.ModelStatus(**meta.to_json())

    @app.get("/models/{model_id}", response_model=schemas.ModelStatus)
    def model_status(model_id: str):
        return schemas.ModelStatus(**store.model_meta(model_id).to_json())

    # prediction ----------------------------------------------------------------

    @app.post("/predict", response_model=schemas.PredictResponse)
    def predict(body: schemas.PredictRequest):
        bundle = store.get_bundle(body.model_id)
        scorer = BundleScorer(bundle)
        if body.scenario_id is not None:
            if body.dataset_id is None:
                raise ApiError(400, "bad_request", "scenario_id requires dataset_id")
            scenario = store.get_scenario(body.dataset_id, body.scenario_id)
            if body.report_text is not None:
                flags = tuple(k for k, v in (body.choices or {}).items() if v)
                si = inputs_from_store(bundle, scenario.store, body.report_text, flags)
            else:
                si = prepare_inputs(scenario, bundle.featurizer, bundle.catalog)
        elif body.logs is not None:
            flags = tuple(k for k, v in (body.choices or {}).items() if v)
            si = inputs_from_store(bundle, _store_from_json(body.logs), body.report_text or "", flags)
        else:
            raise ApiError(400, "bad_request", "provide scenario_id (with dataset_id) or inline logs")
        ranked = scorer.predict(si, k=body.k)
        return schemas.PredictResponse(
            model_id=body.model_id,
            scenario_id=body.scenario_id,
            k=ranked.k,
            queries=[
                schemas.PredictedQueryBody(
                    rank=q.rank,
                    text=q.text,
                    probability=q.probability,
                    dialect=q.dialect,
                    template=q.template_text,
                )
                for q in ranked.queries
            ],
        )

    # execution -----------------------------------------------------------------

    @app.post("/execute", response_model=schemas.ExecuteResponse)
    def execute_query(body: schemas.ExecuteRequest):
        scenario = store.get_scenario(body.dataset_id, body.scenario_id)
        ast = parse_query(body.query, detect_dialect(body.query))
        table = execute(ast, scenario.store, scenario_id=scenario.id)
        return schemas.ExecuteResponse(
            columns=table.columns,
            rows=table.rows,
            query=table.provenance[0],
            scenario_id=body.scenario_id,
        )

    # sessions ---------------------------------------------------------------------

    @app.post("/sessions", response_model=schemas.SessionBody)
    def create_session(body: schemas.SessionCreate):
        session = store.create_session(body.dataset_id, body.scenario_id, body.report_text)
        return schemas.SessionBody(**session.to_json())

    @app.get("/sessions/{session_id}", response_model=schemas.SessionBody)
    def get_session(session_id: str):
        return schemas.SessionBody(**store.get_session(session_id).to_json())

    @app.patch("/sessions/{session_id}", response_model=schemas.SessionBody)
    def patch_session(session_id: str, body: schemas.SessionPatch):
        patch = {
            "predictions": [p.model_dump() for p in body.predictions] if body.predictions is not None else None,
            "executed_query": body.executed_query,
            "verdict_index": body.verdict_index,
        }
        session = store.patch_session(session_id, patch)
        return schemas.SessionBody(**session.to_json())

    # static UI -----------------------------------------------------------------

    resolved_ui = Path(ui_dir) if ui_dir else Path(os.environ.get("QUERYSCOUT_UI_DIR", "frontend/dist"))
    if resolved_ui.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(resolved_ui), html=True), name="ui")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    return app
