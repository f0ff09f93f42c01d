"""Request and response bodies for the HTTP service.

Binary inputs (clips, bitstreams, model bundles) travel as base64 inside
JSON so every endpoint stays a plain JSON POST.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class DetectRequest(BaseModel):
    video_b64: str = Field(description="base64 of a YUV4MPEG2 clip")
    meta_csv: str | None = Field(
        default=None, description="frame index,type,size CSV sidecar"
    )
    stream_b64: str | None = Field(
        default=None, description="base64 Annex-B bitstream to derive types from"
    )
    threshold: float | None = None


class DetectResponse(BaseModel):
    probability: float
    decision: bool
    threshold: float
    features: dict[str, float]


class ExtractRequest(BaseModel):
    video_b64: str
    radius: int | None = None
    bins: int | None = None


class FrameFeatures(BaseModel):
    frame: int
    values: dict[str, float] | None = Field(
        description="per-channel cloud features, null when the frame is degenerate"
    )


class ExtractResponse(BaseModel):
    frames: list[FrameFeatures]


class ParseStreamRequest(BaseModel):
    stream_b64: str


class PictureRecord(BaseModel):
    index: int
    type: str
    size: int


class ParseStreamResponse(BaseModel):
    pictures: list[PictureRecord]


class ModelUpload(BaseModel):
    bundle_b64: str


class ModelInfo(BaseModel):
    loaded: bool
    has_frame_ensemble: bool = False
    vector_width: int | None = None
    config: dict | None = None


class HealthResponse(BaseModel):
    status: str
    version: str
