"""Core picture model: planes, frames, sequences, per-frame coding metadata.

Samples are stored as uint16 regardless of bit depth so a single array type
covers everything from 6 to 16 bits. All containers are immutable after
construction; the arrays they hold are marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError, SampleRangeError, ShapeError

MIN_DEPTH = 6
MAX_DEPTH = 16


class FrameType(str, Enum):
    """Coding type of a picture as signaled by the encoder."""

    I = "I"
    P = "P"
    B = "B"


FRAME_TYPES = (FrameType.I, FrameType.P, FrameType.B)


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a)
    if out is a:
        out = a.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Plane:
    """One channel of one frame.

    Args:
        samples: 2-D integer array, shape (height, width).
        bit_depth: declared depth d; every sample must lie in [0, 2**d).

    Raises:
        DomainError: depth outside [6, 16] or samples not a 2-D array.
        SampleRangeError: any sample outside [0, 2**bit_depth).
    """

    samples: np.ndarray
    bit_depth: int

    def __post_init__(self) -> None:
        if not MIN_DEPTH <= int(self.bit_depth) <= MAX_DEPTH:
            raise DomainError(f"bit depth {self.bit_depth} outside [{MIN_DEPTH}, {MAX_DEPTH}]")
        a = np.asarray(self.samples)
        if a.ndim != 2 or a.size == 0:
            raise ShapeError(f"plane samples must be a non-empty 2-D array, got shape {a.shape}")
        if not np.issubdtype(a.dtype, np.integer):
            raise DomainError(f"plane samples must be integers, got dtype {a.dtype}")
        if a.min() < 0 or a.max() >= (1 << int(self.bit_depth)):
            raise SampleRangeError(
                f"sample outside [0, 2**{self.bit_depth}) in a {a.shape[1]}x{a.shape[0]} plane"
            )
        object.__setattr__(self, "samples", _freeze(a.astype(np.uint16)))
        object.__setattr__(self, "bit_depth", int(self.bit_depth))

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]


def plane_names(count: int) -> tuple[str, ...]:
    """Channel labels for a plane count of 1 (luma only) or 3 (luma + chroma)."""
    if count == 1:
        return ("Y",)
    if count == 3:
        return ("Y", "Cb", "Cr")
    raise DomainError(f"frames carry 1 or 3 planes, not {count}")


@dataclass(frozen=True)
class Frame:
    """A single picture: one plane (grey) or three (Y, Cb, Cr).

    Chroma planes may be subsampled; all planes must share one bit depth.
    """

    planes: tuple[Plane, ...]

    def __post_init__(self) -> None:
        planes = tuple(self.planes)
        plane_names(len(planes))
        depths = {p.bit_depth for p in planes}
        if len(depths) != 1:
            raise DomainError(f"planes disagree on bit depth: {sorted(depths)}")
        object.__setattr__(self, "planes", planes)

    @property
    def bit_depth(self) -> int:
        return self.planes[0].bit_depth

    @property
    def width(self) -> int:
        return self.planes[0].width

    @property
    def height(self) -> int:
        return self.planes[0].height

    def geometry(self) -> tuple[tuple[int, int], ...]:
        return tuple((p.height, p.width) for p in self.planes)


@dataclass(frozen=True)
class FrameMeta:
    """Coding metadata for one picture: display index, type, compressed size."""

    index: int
    frame_type: FrameType
    compressed_size: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise DomainError(f"frame index must be >= 0, got {self.index}")
        if self.compressed_size < 0:
            raise DomainError(f"compressed size must be >= 0, got {self.compressed_size}")
        object.__setattr__(self, "frame_type", FrameType(self.frame_type))


@dataclass(frozen=True)
class VideoSequence:
    """An ordered run of frames with identical geometry and depth.

    Metadata, when present, must align one-to-one with the frames by index.
    """

    frames: tuple[Frame, ...]
    metadata: tuple[FrameMeta, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        frames = tuple(self.frames)
        if not frames:
            raise DomainError("a sequence needs at least one frame")
        geom = frames[0].geometry()
        depth = frames[0].bit_depth
        for i, f in enumerate(frames):
            if f.geometry() != geom or f.bit_depth != depth:
                raise ShapeError(f"frame {i} geometry/depth differs from frame 0")
        object.__setattr__(self, "frames", frames)
        if self.metadata is not None:
            meta = tuple(sorted(self.metadata, key=lambda m: m.index))
            if [m.index for m in meta] != list(range(len(frames))):
                raise DomainError(
                    f"metadata indexes must cover 0..{len(frames) - 1} exactly once"
                )
            object.__setattr__(self, "metadata", meta)

    @property
    def bit_depth(self) -> int:
        return self.frames[0].bit_depth

    @property
    def plane_count(self) -> int:
        return len(self.frames[0].planes)

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[Frame]:
        return iter(self.frames)

    def with_metadata(self, metadata: Sequence[FrameMeta]) -> "VideoSequence":
        return VideoSequence(self.frames, tuple(metadata))
