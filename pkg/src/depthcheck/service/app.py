"""FastAPI application exposing detection over HTTP.

The service holds at most one detector bundle in memory. Judging and
feature extraction are pure functions of the uploaded bytes, so the app
keeps no other state and can run with any number of workers once a
bundle is loaded per process.
"""

from __future__ import annotations

import base64
import binascii

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import RunConfig
from ..detector import DetectorBundle, detect
from ..errors import DepthcheckError, ModelFormatError, ParseError
from ..features import frame_feature_names, frame_feature_vector
from ..hevc import parse_stream
from ..ingest import read_frame_metadata, read_y4m
from .schemas import (
    DetectRequest,
    DetectResponse,
    ExtractRequest,
    ExtractResponse,
    FrameFeatures,
    HealthResponse,
    ModelInfo,
    ModelUpload,
    ParseStreamRequest,
    ParseStreamResponse,
    PictureRecord,
)


def _decode(field: str, value: str) -> bytes:
    try:
        return base64.b64decode(value, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise HTTPException(status_code=400, detail=f"{field} is not valid base64") from exc


def create_app(
    bundle: DetectorBundle | None = None, config: RunConfig | None = None
) -> FastAPI:
    """Build the service; an initial bundle is optional and replaceable."""
    app = FastAPI(title="depthcheck", version=__version__)
    app.state.bundle = bundle
    app.state.config = config or (bundle.config if bundle else RunConfig())

    @app.exception_handler(DepthcheckError)
    async def _domain_error(request, exc: DepthcheckError):
        from fastapi.responses import JSONResponse

        status = 400 if isinstance(exc, (ParseError, ModelFormatError)) else 422
        return JSONResponse(
            status_code=status,
            content={"detail": str(exc), "error": type(exc).__name__},
        )

    @app.get("/health", response_model=HealthResponse)
    async def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/model", response_model=ModelInfo)
    async def model_info() -> ModelInfo:
        b: DetectorBundle | None = app.state.bundle
        if b is None:
            return ModelInfo(loaded=False)
        return ModelInfo(
            loaded=True,
            has_frame_ensemble=b.ensemble is not None,
            vector_width=b.forest.width,
            config=b.config.to_dict(),
        )

    @app.post("/model", response_model=ModelInfo)
    async def model_upload(body: ModelUpload) -> ModelInfo:
        blob = _decode("bundle_b64", body.bundle_b64)
        app.state.bundle = DetectorBundle.load(blob)
        app.state.config = app.state.bundle.config
        return await model_info()

    @app.post("/detect", response_model=DetectResponse)
    async def detect_clip(body: DetectRequest) -> DetectResponse:
        b: DetectorBundle | None = app.state.bundle
        if b is None:
            raise HTTPException(status_code=409, detail="no model loaded; POST /model first")
        video = read_y4m(_decode("video_b64", body.video_b64))
        if body.meta_csv is not None:
            video = video.with_metadata(read_frame_metadata(body.meta_csv))
        elif body.stream_b64 is not None:
            video = video.with_metadata(
                parse_stream(_decode("stream_b64", body.stream_b64))
            )
        verdict = detect(video, b, threshold=body.threshold)
        return DetectResponse(
            probability=verdict.probability,
            decision=verdict.decision,
            threshold=verdict.threshold,
            features=verdict.features,
        )

    @app.post("/extract", response_model=ExtractResponse)
    async def extract(body: ExtractRequest) -> ExtractResponse:
        cfg: RunConfig = app.state.config
        radius = body.radius if body.radius is not None else cfg.radius
        bins = body.bins if body.bins is not None else cfg.bins
        video = read_y4m(_decode("video_b64", body.video_b64))
        names = frame_feature_names(video.plane_count)
        out = []
        for fi, frame in enumerate(video.frames):
            try:
                vec = frame_feature_vector(frame, radius, bins)
                out.append(
                    FrameFeatures(frame=fi, values=dict(zip(names, vec.tolist())))
                )
            except DepthcheckError:
                out.append(FrameFeatures(frame=fi, values=None))
        return ExtractResponse(frames=out)

    @app.post("/parse-stream", response_model=ParseStreamResponse)
    async def parse(body: ParseStreamRequest) -> ParseStreamResponse:
        records = parse_stream(_decode("stream_b64", body.stream_b64))
        return ParseStreamResponse(
            pictures=[
                PictureRecord(
                    index=m.index, type=m.frame_type.value, size=m.compressed_size
                )
                for m in records
            ]
        )

    return app
