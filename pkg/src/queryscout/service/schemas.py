"""Request/response models for the HTTP API."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class ErrorBody(BaseModel):
    code: str
    message: str


class DatasetRequest(BaseModel):
    n_services: int = 14
    n_faults: int = 60
    reports_per_fault: int = 10
    seed: int = 7
    duration_s: float = 40.0
    rate_per_s: float = 1.0
    benign_anomaly_rate: float = 0.35
    generalize_fraction: float = 0.2


class DatasetResponse(BaseModel):
    dataset_id: str
    n_scenarios: int
    splits: dict[str, int]


class ScenarioSummary(BaseModel):
    id: str
    split: str
    category: str
    location: str
    report_text: str
    choices: dict[str, bool]
    ground_truth_query: Optional[str] = None


class TrainRequest(BaseModel):
    dataset_id: str
    seed: int = 0
    epochs: int = 50
    patience: int = 10
    ablation: Optional[str] = Field(
        default=None,
        description="exclude-report | no-rank-order | monolithic | classifier | "
        "single-tool=<dialect> | drop-feature=<metric>",
    )


class ModelStatus(BaseModel):
    model_id: str
    status: str  # queued | running | done | failed
    dataset_id: str
    ablation: Optional[str] = None
    metrics: Optional[dict[str, Any]] = None
    error: Optional[str] = None


class PredictRequest(BaseModel):
    model_id: str
    k: int = 5
    dataset_id: Optional[str] = None
    scenario_id: Optional[str] = None
    report_text: Optional[str] = None
    choices: Optional[dict[str, bool]] = None
    logs: Optional[dict[str, Any]] = None  # inline TelemetryStore JSON


class PredictedQueryBody(BaseModel):
    rank: int
    text: str
    probability: float
    dialect: str
    template: str


class PredictResponse(BaseModel):
    model_id: str
    scenario_id: Optional[str]
    k: int
    queries: list[PredictedQueryBody]


class ExecuteRequest(BaseModel):
    dataset_id: str
    scenario_id: str
    query: str


class ExecuteResponse(BaseModel):
    columns: list[str]
    rows: list[list[Any]]
    query: str
    scenario_id: str


class SessionCreate(BaseModel):
    dataset_id: str
    scenario_id: str
    report_text: Optional[str] = None


class SessionPatch(BaseModel):
    predictions: Optional[list[PredictedQueryBody]] = None
    executed_query: Optional[str] = None
    verdict_index: Optional[int] = None


class ExecutedQuery(BaseModel):
    query: str
    timestamp: float


class SessionBody(BaseModel):
    session_id: str
    dataset_id: str
    scenario_id: str
    report_text: Optional[str] = None
    predictions: list[PredictedQueryBody] = []
    executed: list[ExecutedQuery] = []
    verdict_index: Optional[int] = None
    created_at: float
    updated_at: float
