"""FastAPI application: thin routing over the handler functions."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import (
    AlignmentError,
    ConfigError,
    DivergenceError,
    SchemaError,
    VideoQAError,
)
from . import handlers
from .schemas import (
    CaptionSimRequest,
    CaptionSimResponse,
    EnsembleRequest,
    EnsembleResponse,
    EvaluateRequest,
    EvaluateResponse,
    PredictRequest,
    PredictResponse,
    TrainRequest,
    TrainResponse,
)


def _http_status(exc: VideoQAError) -> int:
    if isinstance(exc, (SchemaError, ConfigError)):
        return 422
    if isinstance(exc, AlignmentError):
        return 409
    if isinstance(exc, DivergenceError):
        return 500
    return 400


def create_app() -> FastAPI:
    app = FastAPI(title="aivqa", description="video quality scoring service")

    @app.exception_handler(VideoQAError)
    async def _domain_error(request: Request, exc: VideoQAError) -> JSONResponse:
        return JSONResponse(
            status_code=_http_status(exc),
            content={
                "kind": type(exc).__name__,
                "message": str(exc),
                "exit_code": exc.exit_code,
            },
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/train", response_model=TrainResponse)
    def train(req: TrainRequest) -> TrainResponse:
        return handlers.handle_train(req)

    @app.post("/predict", response_model=PredictResponse)
    def predict(req: PredictRequest) -> PredictResponse:
        return handlers.handle_predict(req)

    @app.post("/evaluate", response_model=EvaluateResponse)
    def evaluate(req: EvaluateRequest) -> EvaluateResponse:
        return handlers.handle_evaluate(req)

    @app.post("/ensemble", response_model=EnsembleResponse)
    def ensemble(req: EnsembleRequest) -> EnsembleResponse:
        return handlers.handle_ensemble(req)

    @app.post("/caption-sim", response_model=CaptionSimResponse)
    def caption_sim(req: CaptionSimRequest) -> CaptionSimResponse:
        return handlers.handle_caption_sim(req)

    return app
