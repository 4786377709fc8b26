"""Request/response models for the HTTP API.

Paths in requests are interpreted on the server's filesystem; this service is
a local scoring daemon, not a public upload endpoint.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class TrainRequest(BaseModel):
    manifest_path: str
    out_dir: str
    val_manifest_path: str | None = None
    config_path: str | None = None
    config: dict | None = None
    overrides: dict[str, object] = Field(default_factory=dict)


class ValReport(BaseModel):
    plcc: float
    srocc: float
    main_score: float
    n: int


class TrainResponse(BaseModel):
    best_checkpoint: str
    last_checkpoint: str
    log_path: str
    epochs_run: int
    steps_run: int
    best_epoch: int | None
    best_val: ValReport | None


class PredictRequest(BaseModel):
    checkpoint_path: str
    manifest_path: str
    out_csv: str
    bundle_log: str | None = None
    video_root: str | None = None


class PredictFailure(BaseModel):
    video_name: str
    reason: str


class PredictResponse(BaseModel):
    out_csv: str
    rows: int
    failures: list[PredictFailure]
    bundle_log: str | None


class EvaluateRequest(BaseModel):
    pred_csv: str
    target_csv: str


class EvaluateResponse(ValReport):
    pass


class EnsembleMember(BaseModel):
    path: str
    weight: float = 1.0


class EnsembleRequest(BaseModel):
    members: list[EnsembleMember]
    out_csv: str
    normalize: bool = False
    fit_targets: str | None = None


class EnsembleResponse(BaseModel):
    out_csv: str
    rows: int
    weights: list[float]
    fitted: bool
    member_srocc: list[float] | None = None
    ensemble_srocc: float | None = None


class CaptionSimRequest(BaseModel):
    manifest_path: str
    out_csv: str
    config_path: str | None = None
    config: dict | None = None
    overrides: dict[str, object] = Field(default_factory=dict)
    video_root: str | None = None


class CaptionSimResponse(BaseModel):
    out_csv: str
    rows: int


class ErrorPayload(BaseModel):
    kind: str
    message: str
    exit_code: int
