"""Decoded-video input and output: Y4M files, raw planar dumps, CSV sidecars.

Y4M support covers the uncompressed YUV4MPEG2 container with mono, 4:2:0,
4:2:2, and 4:4:4 layouts at 8 to 16 bits. Samples wider than 8 bits are
little-endian two-byte words, the convention every common tool writes.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import BinaryIO, Sequence

import numpy as np

from .errors import ConfigError, ParseError, SampleRangeError, TruncatedInputError
from .frames import Frame, FrameMeta, FrameType, Plane, VideoSequence

_SUBSAMPLINGS = ("420", "422", "444", "mono")

# colorspace tag -> (subsampling, bit depth)
_COLORSPACES = {
    "420": ("420", 8),
    "420jpeg": ("420", 8),
    "420mpeg2": ("420", 8),
    "420paldv": ("420", 8),
    "420p10": ("420", 10),
    "420p12": ("420", 12),
    "420p14": ("420", 14),
    "420p16": ("420", 16),
    "422": ("422", 8),
    "422p10": ("422", 10),
    "422p12": ("422", 12),
    "422p14": ("422", 14),
    "422p16": ("422", 16),
    "444": ("444", 8),
    "444p10": ("444", 10),
    "444p12": ("444", 12),
    "444p14": ("444", 14),
    "444p16": ("444", 16),
    "mono": ("mono", 8),
    "mono10": ("mono", 10),
    "mono12": ("mono", 12),
    "mono14": ("mono", 14),
    "mono16": ("mono", 16),
}


def _plane_dims(subsampling: str, width: int, height: int) -> list[tuple[int, int]]:
    if width < 1 or height < 1:
        raise ParseError(f"bad frame size {width}x{height}")
    if subsampling == "mono":
        return [(height, width)]
    if subsampling == "444":
        return [(height, width)] * 3
    if subsampling == "422":
        if width % 2:
            raise ParseError(f"4:2:2 needs an even width, got {width}")
        return [(height, width), (height, width // 2), (height, width // 2)]
    if subsampling == "420":
        if width % 2 or height % 2:
            raise ParseError(f"4:2:0 needs even dimensions, got {width}x{height}")
        half = (height // 2, width // 2)
        return [(height, width), half, half]
    raise ConfigError(f"unknown subsampling {subsampling!r}")


def _read_plane(buf: bytes, pos: int, dims: tuple[int, int], depth: int, where: str) -> tuple[np.ndarray, int]:
    h, w = dims
    two_byte = depth > 8
    nbytes = h * w * (2 if two_byte else 1)
    chunk = buf[pos : pos + nbytes]
    if len(chunk) < nbytes:
        raise TruncatedInputError(f"{where}: need {nbytes} bytes, have {len(chunk)}")
    dtype = np.dtype("<u2") if two_byte else np.dtype("u1")
    a = np.frombuffer(chunk, dtype=dtype).reshape(h, w)
    if int(a.max(initial=0)) >= 1 << depth:
        raise SampleRangeError(f"{where}: sample exceeds {depth}-bit range")
    return a.astype(np.uint16), pos + nbytes


def read_y4m(source: bytes | BinaryIO) -> VideoSequence:
    """Parse a YUV4MPEG2 byte string or binary file object into a sequence.

    Raises:
        ParseError: malformed signature, header, or frame marker.
        TruncatedInputError: stream ends inside a frame payload.
        SampleRangeError: a stored sample exceeds the declared bit depth.
    """
    data = source if isinstance(source, bytes) else source.read()
    nl = data.find(b"\n")
    if nl < 0:
        raise ParseError("no stream header line")
    fields = data[:nl].split(b" ")
    if fields[0] != b"YUV4MPEG2":
        raise ParseError("missing YUV4MPEG2 signature")
    width = height = 0
    subsampling, depth = "420", 8
    for raw in fields[1:]:
        if not raw:
            continue
        tag, value = chr(raw[0]), raw[1:].decode("ascii", "replace")
        if tag == "W":
            width = int(value)
        elif tag == "H":
            height = int(value)
        elif tag == "C":
            if value not in _COLORSPACES:
                raise ParseError(f"unsupported colorspace C{value}")
            subsampling, depth = _COLORSPACES[value]
        # F (rate), I (interlacing), A (aspect), X (comment) do not affect samples
    if width <= 0 or height <= 0:
        raise ParseError("header missing W or H")
    dims = _plane_dims(subsampling, width, height)

    frames: list[Frame] = []
    pos = nl + 1
    while pos < len(data):
        marker_end = data.find(b"\n", pos)
        if marker_end < 0:
            raise ParseError(f"frame {len(frames)}: unterminated FRAME marker")
        if not data[pos:marker_end].startswith(b"FRAME"):
            raise ParseError(f"frame {len(frames)}: expected FRAME marker")
        pos = marker_end + 1
        planes = []
        for pi, pdims in enumerate(dims):
            arr, pos = _read_plane(data, pos, pdims, depth, f"frame {len(frames)} plane {pi}")
            planes.append(Plane(arr, depth))
        frames.append(Frame(tuple(planes)))
    if not frames:
        raise ParseError("stream contains no frames")
    return VideoSequence(tuple(frames))


def write_y4m(video: VideoSequence) -> bytes:
    """Serialize a sequence back to YUV4MPEG2 bytes (round-trips read_y4m)."""
    first = video.frames[0]
    h, w = first.planes[0].samples.shape
    geom = first.geometry()
    if len(geom) == 1:
        sub = "mono"
    elif geom[1] == (h, w):
        sub = "444"
    elif geom[1] == (h, w // 2):
        sub = "422"
    elif geom[1] == (h // 2, w // 2):
        sub = "420"
    else:
        raise ConfigError(f"chroma geometry {geom[1]} is not a writable layout")
    depth = video.bit_depth
    if depth == 8:
        tag = sub
    elif sub == "mono":
        tag = f"mono{depth}"
    else:
        tag = f"{sub}p{depth}"
    if tag not in _COLORSPACES:
        raise ConfigError(f"no colorspace tag for {sub} at {depth} bits")
    out = io.BytesIO()
    out.write(f"YUV4MPEG2 W{w} H{h} F25:1 Ip A1:1 C{tag}\n".encode())
    dtype = np.dtype("<u2") if depth > 8 else np.dtype("u1")
    for frame in video.frames:
        out.write(b"FRAME\n")
        for plane in frame.planes:
            out.write(np.ascontiguousarray(plane.samples.astype(dtype)).tobytes())
    return out.getvalue()


@dataclass(frozen=True)
class RawLayout:
    """Geometry needed to slice a headerless planar dump into frames."""

    width: int
    height: int
    bit_depth: int
    subsampling: str = "420"
    two_byte: bool = True

    def __post_init__(self) -> None:
        if self.subsampling not in _SUBSAMPLINGS:
            raise ConfigError(f"subsampling must be one of {_SUBSAMPLINGS}")
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"bad raw frame size {self.width}x{self.height}")
        if self.bit_depth > 8 and not self.two_byte:
            raise ConfigError("depths above 8 bits require two-byte samples")

    def frame_bytes(self) -> int:
        per = 2 if self.two_byte else 1
        return sum(h * w for h, w in _plane_dims(self.subsampling, self.width, self.height)) * per


def read_raw_planar(data: bytes, layout: RawLayout) -> VideoSequence:
    """Slice a raw planar dump into frames according to an explicit layout.

    Raises:
        TruncatedInputError: total length is not a whole number of frames.
        SampleRangeError: a sample exceeds the declared bit depth.
    """
    per_frame = layout.frame_bytes()
    if not data or len(data) % per_frame:
        raise TruncatedInputError(
            f"raw dump of {len(data)} bytes is not a multiple of the {per_frame}-byte frame"
        )
    dims = _plane_dims(layout.subsampling, layout.width, layout.height)
    depth = layout.bit_depth
    frames = []
    pos = 0
    for fi in range(len(data) // per_frame):
        planes = []
        for pi, pdims in enumerate(dims):
            h, w = pdims
            n = h * w * (2 if layout.two_byte else 1)
            dtype = np.dtype("<u2") if layout.two_byte else np.dtype("u1")
            a = np.frombuffer(data[pos : pos + n], dtype=dtype).reshape(h, w)
            if int(a.max(initial=0)) >= 1 << depth:
                raise SampleRangeError(f"frame {fi} plane {pi}: sample exceeds {depth}-bit range")
            planes.append(Plane(a.astype(np.uint16), depth))
            pos += n
        frames.append(Frame(tuple(planes)))
    return VideoSequence(tuple(frames))


def read_frame_metadata(text: str) -> tuple[FrameMeta, ...]:
    """Parse an "index,type,size" CSV sidecar; a header row is tolerated.

    Records come back sorted by index. Raises ParseError on duplicate
    indexes, unknown type letters, or malformed sizes.
    """
    records: dict[int, FrameMeta] = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise ParseError(f"sidecar line {ln}: expected index,type,size")
        if ln == 1 and not parts[0].lstrip("-").isdigit():
            continue  # header row
        try:
            index = int(parts[0])
            size = int(parts[2])
        except ValueError as exc:
            raise ParseError(f"sidecar line {ln}: {exc}") from exc
        try:
            ftype = FrameType(parts[1].upper())
        except ValueError as exc:
            raise ParseError(f"sidecar line {ln}: unknown frame type {parts[1]!r}") from exc
        if index in records:
            raise ParseError(f"sidecar line {ln}: duplicate index {index}")
        if size < 0:
            raise ParseError(f"sidecar line {ln}: negative size {size}")
        records[index] = FrameMeta(index, ftype, size)
    if not records:
        raise ParseError("sidecar holds no records")
    return tuple(records[i] for i in sorted(records))


def write_frame_metadata(records: Sequence[FrameMeta]) -> str:
    """Format metadata records as the CSV sidecar read_frame_metadata accepts."""
    lines = ["index,type,size"]
    for m in sorted(records, key=lambda r: r.index):
        lines.append(f"{m.index},{m.frame_type.value},{m.compressed_size}")
    return "\n".join(lines) + "\n"
