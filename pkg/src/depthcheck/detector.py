"""Per-video evidence assembly and the final verdict.

A clip becomes one fixed-width vector: average compressed size per frame
type, then per channel and per frame type the distribution of two low-bit
statistics and of the frame ensemble's probability (their means, their
normality statistics, a presence flag), then per channel the t statistics
comparing those series between frame-type pairs. A random forest trained
on such vectors gives the probability that the clip's low bits were
synthesized.

Missing evidence never changes the vector's width: a frame type that does
not occur contributes zeros with its presence flag at 0, and series too
short or too flat for a test contribute a zero statistic.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .config import RunConfig, provenance
from .errors import (
    DegenerateSampleError,
    DomainError,
    FeatureError,
    ModelFormatError,
    SampleTooSmallError,
    ShapeError,
)
from .features import frame_feature_vector
from .frames import FRAME_TYPES, FrameMeta, VideoSequence, plane_names
from .ml import Model, load_model, predict_proba, save_model
from .ml.serialize import MAGIC as _MODEL_MAGIC
from .stats import shapiro_wilk, t_test

TYPE_PAIRS = ((FRAME_TYPES[0], FRAME_TYPES[1]),
              (FRAME_TYPES[0], FRAME_TYPES[2]),
              (FRAME_TYPES[1], FRAME_TYPES[2]))

BUNDLE_MAGIC = b"DCBUNDL\x01"


def feature_names(plane_count: int) -> list[str]:
    """Labels for every slot of the per-video vector, in order."""
    names = [f"avg_size_{t.value}" for t in FRAME_TYPES]
    for ch in plane_names(plane_count):
        for t in FRAME_TYPES:
            base = f"{ch}_{t.value}"
            names += [
                f"{base}_mean",
                f"{base}_std",
                f"{base}_prob",
                f"{base}_sw_mean",
                f"{base}_sw_std",
                f"{base}_sw_prob",
                f"{base}_present",
            ]
    for ch in plane_names(plane_count):
        for a, b in TYPE_PAIRS:
            base = f"{ch}_{a.value}{b.value}"
            names += [f"{base}_t_mean", f"{base}_t_std", f"{base}_t_prob"]
    return names


def vector_width(plane_count: int) -> int:
    return 3 + plane_count * 21 + plane_count * 9


@dataclass
class ClipStats:
    """Ensemble-independent per-frame measurements, cached once per clip."""

    lsb_mean: np.ndarray  # (frames, planes)
    lsb_std: np.ndarray
    frame_vectors: list  # per frame: np.ndarray or None when extraction failed
    luma_pixels: int
    plane_count: int


def _measure_frame(frame, radius: int, bins: int):
    means, stds = [], []
    for plane in frame.planes:
        low = (plane.samples & np.uint16(3)).astype(np.float64)
        means.append(low.mean())
        stds.append(low.std())
    try:
        vector = frame_feature_vector(frame, radius, bins)
    except FeatureError:
        vector = None
    return means, stds, vector


def compute_clip_stats(video: VideoSequence, config: RunConfig | None = None) -> ClipStats:
    """Measure every frame once; cloud failures leave a None vector.

    Frames are independent, so config.threads > 1 fans the work over a
    thread pool; results are collected in frame order either way.
    """
    config = config or RunConfig()
    n = len(video)
    planes = video.plane_count
    lsb_mean = np.zeros((n, planes))
    lsb_std = np.zeros((n, planes))
    vectors = []
    workers = config.threads if config.threads > 0 else (os.cpu_count() or 1)
    if workers > 1 and n > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda f: _measure_frame(f, config.radius, config.bins), video.frames)
            )
    else:
        results = [_measure_frame(f, config.radius, config.bins) for f in video.frames]
    for fi, (means, stds, vector) in enumerate(results):
        lsb_mean[fi] = means
        lsb_std[fi] = stds
        vectors.append(vector)
    first = video.frames[0]
    return ClipStats(
        lsb_mean=lsb_mean,
        lsb_std=lsb_std,
        frame_vectors=vectors,
        luma_pixels=first.planes[0].samples.size,
        plane_count=planes,
    )


def _sw_or_zero(series: np.ndarray) -> float:
    try:
        return shapiro_wilk(series).statistic
    except (SampleTooSmallError, DegenerateSampleError):
        return 0.0


def _t_or_zero(a: np.ndarray, b: np.ndarray) -> float:
    try:
        return t_test(a, b).statistic
    except (SampleTooSmallError, DegenerateSampleError):
        return 0.0


def assemble_from_stats(
    stats: ClipStats,
    metadata: tuple[FrameMeta, ...],
    ensemble: Model | None,
    config: RunConfig | None = None,
) -> np.ndarray:
    """Reduce cached per-frame measurements to the per-video vector.

    Raises:
        DomainError: metadata does not align with the measured frames.
        FeatureError: an ensemble is present but no frame produced the
            cloud features it needs.
    """
    config = config or RunConfig()
    n = stats.lsb_mean.shape[0]
    meta = tuple(sorted(metadata, key=lambda m: m.index))
    if [m.index for m in meta] != list(range(n)):
        raise DomainError(f"metadata must cover frames 0..{n - 1} exactly once")

    probs = np.zeros(n)
    has_prob = np.ones(n, dtype=bool)
    if ensemble is not None:
        rows = [i for i, fv in enumerate(stats.frame_vectors) if fv is not None]
        if not rows:
            raise FeatureError("no frame produced cloud features for the ensemble")
        matrix = np.vstack([stats.frame_vectors[i] for i in rows])
        probs[rows] = predict_proba(ensemble, matrix)
        has_prob = np.zeros(n, dtype=bool)
        has_prob[rows] = True

    types = np.array([FRAME_TYPES.index(m.frame_type) for m in meta])
    sizes = np.array([m.compressed_size for m in meta], dtype=np.float64)
    if config.size_per_pixel:
        sizes = sizes / stats.luma_pixels

    out = []
    for ti in range(3):
        sel = types == ti
        out.append(float(sizes[sel].mean()) if sel.any() else 0.0)
    by_type = [np.nonzero(types == ti)[0] for ti in range(3)]
    for ch in range(stats.plane_count):
        for ti in range(3):
            sel = by_type[ti]
            m_series = stats.lsb_mean[sel, ch]
            s_series = stats.lsb_std[sel, ch]
            p_series = probs[sel][has_prob[sel]]
            present = 1.0 if sel.size else 0.0
            out += [
                float(m_series.mean()) if sel.size else 0.0,
                float(s_series.mean()) if sel.size else 0.0,
                float(p_series.mean()) if p_series.size else 0.0,
                _sw_or_zero(m_series) if sel.size else 0.0,
                _sw_or_zero(s_series) if sel.size else 0.0,
                _sw_or_zero(p_series) if p_series.size else 0.0,
                present,
            ]
    for ch in range(stats.plane_count):
        for a, b in ((0, 1), (0, 2), (1, 2)):
            sa, sb = by_type[a], by_type[b]
            ok = sa.size >= 2 and sb.size >= 2
            pa, pb = probs[sa][has_prob[sa]], probs[sb][has_prob[sb]]
            p_ok = pa.size >= 2 and pb.size >= 2
            out += [
                _t_or_zero(stats.lsb_mean[sa, ch], stats.lsb_mean[sb, ch]) if ok else 0.0,
                _t_or_zero(stats.lsb_std[sa, ch], stats.lsb_std[sb, ch]) if ok else 0.0,
                _t_or_zero(pa, pb) if p_ok else 0.0,
            ]
    vec = np.asarray(out, dtype=np.float64)
    assert vec.size == vector_width(stats.plane_count)
    return vec


def assemble_features(
    video: VideoSequence,
    metadata: tuple[FrameMeta, ...] | None = None,
    ensemble: Model | None = None,
    config: RunConfig | None = None,
) -> np.ndarray:
    """One-call form: measure a clip and reduce it to the per-video vector.

    Metadata defaults to whatever the sequence itself carries.
    """
    meta = metadata if metadata is not None else video.metadata
    if meta is None:
        raise DomainError("per-video features need frame types: supply metadata")
    return assemble_from_stats(compute_clip_stats(video, config), meta, ensemble, config)


@dataclass(frozen=True)
class Verdict:
    """The detector's answer for one clip."""

    probability: float
    decision: bool
    threshold: float
    features: dict[str, float]


@dataclass
class DetectorBundle:
    """Everything needed to judge a clip: both model stages plus settings."""

    forest: Model
    ensemble: Model | None
    config: RunConfig

    def save(self) -> bytes:
        doc = {
            "provenance": provenance(self.config),
            "forest": save_model(self.forest).hex(),
            "ensemble": save_model(self.ensemble).hex() if self.ensemble else None,
        }
        payload = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
        import hashlib

        return BUNDLE_MAGIC + hashlib.sha256(payload).digest() + payload

    @classmethod
    def load(cls, blob: bytes) -> "DetectorBundle":
        import hashlib

        if len(blob) < len(BUNDLE_MAGIC) + 32 + 2:
            raise ModelFormatError("bundle blob too short")
        if blob[: len(BUNDLE_MAGIC)] != BUNDLE_MAGIC:
            if blob[: len(_MODEL_MAGIC)] == _MODEL_MAGIC:
                raise ModelFormatError("this is a bare model, not a detector bundle")
            raise ModelFormatError("bad bundle magic or format version")
        digest = blob[len(BUNDLE_MAGIC) : len(BUNDLE_MAGIC) + 32]
        payload = blob[len(BUNDLE_MAGIC) + 32 :]
        if hashlib.sha256(payload).digest() != digest:
            raise ModelFormatError("checksum mismatch, bundle bytes are corrupt")
        try:
            doc = json.loads(payload)
            forest = load_model(bytes.fromhex(doc["forest"]))
            ensemble = (
                load_model(bytes.fromhex(doc["ensemble"])) if doc.get("ensemble") else None
            )
            config = RunConfig.from_dict(doc["provenance"]["config"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed bundle document: {exc}") from exc
        return cls(forest=forest, ensemble=ensemble, config=config)


def detect(
    video: VideoSequence,
    bundle: DetectorBundle,
    metadata: tuple[FrameMeta, ...] | None = None,
    threshold: float | None = None,
) -> Verdict:
    """Judge one clip; decision is probability >= threshold.

    Raises:
        ShapeError: the bundle's forest was trained for a different plane
            count than this clip provides.
    """
    thr = bundle.config.threshold if threshold is None else float(threshold)
    if not 0 <= thr <= 1:
        raise DomainError(f"threshold must be in [0, 1], got {thr}")
    vec = assemble_features(video, metadata, bundle.ensemble, bundle.config)
    if vec.size != bundle.forest.width:
        raise ShapeError(
            f"clip yields {vec.size} features but the model expects {bundle.forest.width}"
        )
    prob = float(predict_proba(bundle.forest, vec[None, :])[0])
    names = feature_names(video.plane_count)
    return Verdict(
        probability=prob,
        decision=prob >= thr,
        threshold=thr,
        features=dict(zip(names, vec.tolist())),
    )
