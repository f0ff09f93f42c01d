"""End-to-end orchestration: corpus to trained detector to scores.

Training is two-staged. Stage one learns a per-frame model (the
svm+boosting ensemble) from point-cloud features of single frames. Stage
two reduces each clip to its fixed-width vector, in which the stage-one
probabilities are three of the per-channel series, and fits the random
forest on those vectors. Cross-validation retrains both stages inside
every fold; only the per-frame measurements are cached across folds,
because they do not depend on any trained model.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .detector import ClipStats, DetectorBundle, assemble_from_stats, compute_clip_stats
from .errors import DomainError, EmptyInputError, FoldError
from .evaluate import CvReport, f1_score
from .frames import VideoSequence
from .ingest import read_frame_metadata, read_y4m
from .ml import Dataset, train
from .simulate import CorpusEntry, load_manifest


@dataclass
class ClipRecord:
    """One corpus clip with its cached per-frame measurements."""

    name: str
    label: int
    group: str
    video: VideoSequence
    stats: ClipStats


def load_clip(entry: CorpusEntry) -> VideoSequence:
    """Read a corpus clip, attaching its frame-type sidecar when present."""
    with open(entry.path, "rb") as fh:
        video = read_y4m(fh)
    if entry.meta_path is not None:
        with open(entry.meta_path, "r", encoding="ascii") as fh:
            video = video.with_metadata(read_frame_metadata(fh.read()))
    return video


def prepare_clips(
    entries: list[CorpusEntry], config: RunConfig | None = None
) -> list[ClipRecord]:
    """Load and measure every clip once, in manifest order."""
    config = config or RunConfig()
    if not entries:
        raise EmptyInputError("corpus has no entries")
    records = []
    for entry in entries:
        video = load_clip(entry)
        records.append(
            ClipRecord(
                name=entry.path.name,
                label=entry.label,
                group=entry.group,
                video=video,
                stats=compute_clip_stats(video, config),
            )
        )
    return records


def load_corpus(manifest_path, config: RunConfig | None = None) -> list[ClipRecord]:
    return prepare_clips(load_manifest(manifest_path), config)


def frame_dataset(records: list[ClipRecord]) -> Dataset:
    """Stack every analyzable frame; each row inherits its clip's label and group."""
    rows, labels, groups = [], [], []
    for rec in records:
        for fv in rec.stats.frame_vectors:
            if fv is None:
                continue
            rows.append(fv)
            labels.append(rec.label)
            groups.append(rec.group)
    if not rows:
        raise EmptyInputError("no frame in any clip produced features")
    return Dataset(
        features=np.vstack(rows),
        labels=np.asarray(labels, dtype=np.int64),
        groups=tuple(groups),
    )


def train_frame_ensemble(records: list[ClipRecord], config: RunConfig | None = None):
    config = config or RunConfig()
    return train("ensemble", frame_dataset(records), config)


def video_dataset(
    records: list[ClipRecord], ensemble, config: RunConfig | None = None
) -> Dataset:
    """One row per clip. Clips without frame-type metadata cannot be used."""
    config = config or RunConfig()
    rows, labels, groups = [], [], []
    for rec in records:
        if rec.video.metadata is None:
            raise DomainError(
                f"clip {rec.name} has no frame metadata; per-video features need it"
            )
        rows.append(
            assemble_from_stats(rec.stats, rec.video.metadata, ensemble, config)
        )
        labels.append(rec.label)
        groups.append(rec.group)
    return Dataset(
        features=np.vstack(rows),
        labels=np.asarray(labels, dtype=np.int64),
        groups=tuple(groups),
    )


def train_detector(
    records: list[ClipRecord],
    config: RunConfig | None = None,
    use_ensemble: bool = True,
    frame_records: list[ClipRecord] | None = None,
) -> DetectorBundle:
    """Fit both stages on the whole corpus and wrap them as one bundle.

    The frame ensemble learns from ``frame_records`` when given, else
    from ``records`` themselves. Passing the uncompressed variants of
    the same scenes there matches the intended staging: the per-frame
    model sees clean refills while the forest sees the compressed clips
    it will judge. ``use_ensemble=False`` skips stage one entirely: the
    probability series in every per-video vector is identically zero,
    which is the ablation used to measure how much the frame model
    contributes.
    """
    config = config or RunConfig()
    stage_one = frame_records if frame_records is not None else records
    ensemble = train_frame_ensemble(stage_one, config) if use_ensemble else None
    forest = train("forest", video_dataset(records, ensemble, config), config)
    return DetectorBundle(forest=forest, ensemble=ensemble, config=config)


def cross_validate_detector(
    records: list[ClipRecord],
    config: RunConfig | None = None,
    use_ensemble: bool = True,
    frame_records: list[ClipRecord] | None = None,
    scorer=f1_score,
) -> CvReport:
    """Grouped leave-one-scene-out validation of the full two-stage detector.

    Both stages are retrained with the held scene's clips removed, so no
    fold ever scores content its models saw; when ``frame_records``
    supplies separate stage-one material, its clips for the held scene
    are excluded too. Folds run in sorted group order.
    """
    config = config or RunConfig()
    groups = sorted({rec.group for rec in records})
    if len(groups) < 2:
        raise FoldError(f"need at least 2 scene groups, got {len(groups)}")
    stage_one = frame_records if frame_records is not None else records
    names, scores = [], []
    for g in groups:
        train_recs = [rec for rec in records if rec.group != g]
        held_recs = [rec for rec in records if rec.group == g]
        if len({rec.label for rec in train_recs}) < 2:
            raise FoldError(f"training side for held-out scene {g!r} is single-class")
        ensemble = None
        if use_ensemble:
            stage_recs = [rec for rec in stage_one if rec.group != g]
            ensemble = train_frame_ensemble(stage_recs, config)
        forest = train("forest", video_dataset(train_recs, ensemble, config), config)
        held = video_dataset(held_recs, ensemble, config)
        probs = np.asarray(
            [float(p) for p in _predict(forest, held.features)], dtype=np.float64
        )
        predicted = (probs >= config.threshold).astype(np.int64)
        names.append(g)
        scores.append(float(scorer(predicted.tolist(), held.labels.tolist())))
    return CvReport(fold_groups=tuple(names), fold_scores=tuple(scores))


def _predict(model, features: np.ndarray) -> np.ndarray:
    from .ml import predict_proba

    return predict_proba(model, features)


@dataclass(frozen=True)
class BenchReport:
    """Throughput of the per-frame measurement pipeline."""

    frames: int
    width: int
    height: int
    bit_depth: int
    plane_count: int
    seconds: float

    @property
    def fps(self) -> float:
        return self.frames / self.seconds if self.seconds > 0 else float("inf")

    def summary(self) -> str:
        return (
            f"{self.frames} frames at {self.width}x{self.height} "
            f"{self.bit_depth}-bit {self.plane_count}-plane: "
            f"{self.seconds:.3f}s, {self.fps:.2f} fps"
        )


def benchmark_extraction(
    width: int = 1920,
    height: int = 1080,
    bit_depth: int = 10,
    frames: int = 8,
    plane_count: int = 3,
    config: RunConfig | None = None,
    seed: int = 0,
) -> BenchReport:
    """Time the full per-frame measurement on synthetic full-range content.

    Frame synthesis happens before the clock starts; only splitting,
    windowed statistics, cloud construction and binning are measured.
    The measurement always runs single-threaded so the reported rate is
    per-core, whatever the surrounding config says.
    """
    import dataclasses

    from .frames import Frame, Plane

    config = dataclasses.replace(config or RunConfig(), threads=1)
    if frames < 1:
        raise DomainError("need at least one frame to benchmark")
    rng = np.random.default_rng(seed)
    full = (1 << bit_depth) - 1
    dims = [(height, width)] + [(height // 2, width // 2)] * (plane_count - 1)
    prepared = []
    for _ in range(frames):
        planes = tuple(
            Plane(rng.integers(0, full + 1, size=d, dtype=np.uint16), bit_depth)
            for d in dims
        )
        prepared.append(Frame(planes=planes))
    started = time.perf_counter()
    video = VideoSequence(frames=tuple(prepared))
    compute_clip_stats(video, config)
    elapsed = time.perf_counter() - started
    return BenchReport(
        frames=frames,
        width=width,
        height=height,
        bit_depth=bit_depth,
        plane_count=plane_count,
        seconds=elapsed,
    )
