"""Endpoint bodies as plain functions so the CLI can call them in-process."""

from __future__ import annotations

from .. import pipeline
from ..config import ConfigError, TrainConfig, config_from_dict, load_config
from ..dataset import load_manifest, write_predictions
from ..ensembling import EnsembleSpec, ensemble_predictions, fit_ensemble_weights, load_member_matrix
from .schemas import (
    CaptionSimRequest,
    CaptionSimResponse,
    EnsembleRequest,
    EnsembleResponse,
    EvaluateRequest,
    EvaluateResponse,
    PredictFailure,
    PredictRequest,
    PredictResponse,
    TrainRequest,
    TrainResponse,
    ValReport,
)


def _build_config(config: dict | None, config_path: str | None, overrides: dict) -> TrainConfig:
    if config is not None and config_path is not None:
        raise ConfigError("pass either an inline config or config_path, not both")
    if config_path is not None:
        return load_config(config_path, overrides)
    return config_from_dict(config, overrides)


def handle_train(req: TrainRequest) -> TrainResponse:
    cfg = _build_config(req.config, req.config_path, req.overrides)
    train_manifest = load_manifest(req.manifest_path, "train")
    val_manifest = (
        load_manifest(req.val_manifest_path, "val") if req.val_manifest_path else None
    )
    result = pipeline.train(cfg, train_manifest, val_manifest, req.out_dir)
    return TrainResponse(
        best_checkpoint=result.best_checkpoint,
        last_checkpoint=result.last_checkpoint,
        log_path=result.log_path,
        epochs_run=result.epochs_run,
        steps_run=result.steps_run,
        best_epoch=result.best_epoch,
        best_val=ValReport(**result.best_val) if result.best_val else None,
    )


def handle_predict(req: PredictRequest) -> PredictResponse:
    manifest = load_manifest(req.manifest_path, "test", video_root=req.video_root)
    result = pipeline.predict(
        req.checkpoint_path, manifest, req.out_csv, bundle_log=req.bundle_log
    )
    return PredictResponse(
        out_csv=result.out_csv,
        rows=result.rows,
        failures=[PredictFailure(video_name=n, reason=r) for n, r in result.failures],
        bundle_log=result.bundle_log,
    )


def handle_evaluate(req: EvaluateRequest) -> EvaluateResponse:
    report = pipeline.evaluate(req.pred_csv, req.target_csv)
    return EvaluateResponse(**report.to_dict())


def handle_ensemble(req: EnsembleRequest) -> EnsembleResponse:
    if req.fit_targets is not None:
        paths = [m.path for m in req.members]
        fit = fit_ensemble_weights(paths, req.fit_targets)
        names, matrix = load_member_matrix(paths)
        fitted = matrix @ list(fit.weights)
        write_predictions(req.out_csv, zip(names, fitted.tolist()))
        return EnsembleResponse(
            out_csv=req.out_csv,
            rows=len(names),
            weights=list(fit.weights),
            fitted=True,
            member_srocc=list(fit.member_srocc),
            ensemble_srocc=fit.ensemble_srocc,
        )
    spec = EnsembleSpec(
        members=tuple((m.path, m.weight) for m in req.members),
        normalize_scores=req.normalize,
    )
    rows = ensemble_predictions(spec)
    write_predictions(req.out_csv, rows)
    return EnsembleResponse(
        out_csv=req.out_csv,
        rows=len(rows),
        weights=[m.weight for m in req.members],
        fitted=False,
    )


def handle_caption_sim(req: CaptionSimRequest) -> CaptionSimResponse:
    cfg = _build_config(req.config, req.config_path, req.overrides)
    manifest = load_manifest(req.manifest_path, "test", video_root=req.video_root)
    rows = pipeline.caption_sim_run(cfg, manifest, req.out_csv)
    return CaptionSimResponse(out_csv=req.out_csv, rows=rows)
