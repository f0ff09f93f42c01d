"""Annex-B H.265 stream slicing: picture types and byte-exact picture sizes.

Only the fields on the path to each slice's type are parsed: enough of the
SPS to know how many bits a slice address takes, enough of the PPS to know
whether dependent slices exist and how many reserved header bits to skip.
Random access pictures short-circuit to type I without touching parameter
sets, which keeps them robust to exotic headers.

Sizes are byte-conserving: every unit's bytes (start code included) land in
exactly one picture. Units that precede a picture (parameter sets, SEI,
delimiters) count toward the picture that follows them; units after the
last slice count toward the last picture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ParseError
from .frames import FrameMeta, FrameType

# VCL nal_unit_type ranges
_NON_IRAP_VCL = range(0, 10)
_IRAP_VCL = range(16, 22)
_RESERVED_VCL = tuple(range(10, 16)) + tuple(range(22, 32))

_SLICE_TYPES = {0: FrameType.B, 1: FrameType.P, 2: FrameType.I}


class BitReader:
    """MSB-first bit reader with the exp-Golomb codes used by slice headers."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0
        self._nbits = 8 * len(data)

    def u(self, n: int) -> int:
        if n == 0:
            return 0
        if self._pos + n > self._nbits:
            raise ParseError("bitstream exhausted")
        out = 0
        pos = self._pos
        for _ in range(n):
            byte = self._data[pos >> 3]
            out = (out << 1) | ((byte >> (7 - (pos & 7))) & 1)
            pos += 1
        self._pos = pos
        return out

    def ue(self) -> int:
        zeros = 0
        while self.u(1) == 0:
            zeros += 1
            if zeros > 63:
                raise ParseError("exp-Golomb prefix too long")
        return (1 << zeros) - 1 + self.u(zeros) if zeros else 0

    def se(self) -> int:
        k = self.ue()
        mag = (k + 1) >> 1
        return mag if k & 1 else -mag


class BitWriter:
    """MSB-first writer mirroring BitReader; builds conforming payloads."""

    def __init__(self) -> None:
        self._bits: list[int] = []

    def u(self, value: int, n: int) -> "BitWriter":
        if value < 0 or (n < 64 and value >> n):
            raise ParseError(f"value {value} does not fit in {n} bits")
        for i in range(n - 1, -1, -1):
            self._bits.append((value >> i) & 1)
        return self

    def ue(self, value: int) -> "BitWriter":
        if value < 0:
            raise ParseError("exp-Golomb codes unsigned values only")
        zeros = (value + 1).bit_length() - 1
        return self.u(0, zeros).u(1, 1).u(value + 1 - (1 << zeros), zeros)

    def se(self, value: int) -> "BitWriter":
        return self.ue(2 * value - 1 if value > 0 else -2 * value)

    def rbsp_trailing(self) -> "BitWriter":
        self.u(1, 1)
        while len(self._bits) % 8:
            self._bits.append(0)
        return self

    def to_bytes(self) -> bytes:
        bits = self._bits + [0] * (-len(self._bits) % 8)
        out = bytearray()
        for i in range(0, len(bits), 8):
            byte = 0
            for b in bits[i : i + 8]:
                byte = (byte << 1) | b
            out.append(byte)
        return bytes(out)


def strip_emulation_prevention(payload: bytes, limit: int | None = None) -> bytes:
    """Undo 00 00 03 escaping; limit bounds the output size when only a
    header prefix is needed."""
    out = bytearray()
    zeros = 0
    i = 0
    n = len(payload)
    while i < n:
        b = payload[i]
        if zeros >= 2 and b == 3 and i + 1 < n and payload[i + 1] <= 3:
            zeros = 0
            i += 1
            continue
        out.append(b)
        zeros = zeros + 1 if b == 0 else 0
        i += 1
        if limit is not None and len(out) >= limit:
            break
    return bytes(out)


def insert_emulation_prevention(rbsp: bytes) -> bytes:
    """Escape 00 00 0x sequences so a raw payload survives Annex-B framing."""
    out = bytearray()
    zeros = 0
    for b in rbsp:
        if zeros >= 2 and b <= 3:
            out.append(3)
            zeros = 0
        out.append(b)
        zeros = zeros + 1 if b == 0 else 0
    return bytes(out)


@dataclass(frozen=True)
class NalUnit:
    """One unit: where it sits, how big it is (start code included), header."""

    offset: int
    size: int
    start_code_len: int
    nal_type: int
    layer_id: int
    temporal_id_plus1: int

    def payload(self, data: bytes) -> bytes:
        start = self.offset + self.start_code_len + 2
        return data[start : self.offset + self.size]


def scan_nal_units(data: bytes) -> tuple[NalUnit, ...]:
    """Find every start-code-delimited unit.

    Units are contiguous from the first start code to the end of the data;
    each unit's size includes its start code.

    Raises:
        ParseError: no start code at all, a unit too short to hold its
            two header bytes, or a set forbidden bit.
    """
    starts = []
    pos = data.find(b"\x00\x00\x01")
    while pos != -1:
        sc = pos
        sc_len = 3
        if pos >= 1 and data[pos - 1] == 0:
            sc = pos - 1
            sc_len = 4
        starts.append((sc, sc_len))
        pos = data.find(b"\x00\x00\x01", pos + 3)
    if not starts:
        raise ParseError("no start code in stream")
    units = []
    for k, (sc, sc_len) in enumerate(starts):
        end = starts[k + 1][0] if k + 1 < len(starts) else len(data)
        size = end - sc
        if size < sc_len + 2:
            raise ParseError(f"unit at byte {sc} too short for a header")
        b0 = data[sc + sc_len]
        b1 = data[sc + sc_len + 1]
        if b0 & 0x80:
            raise ParseError(f"forbidden bit set in unit at byte {sc}")
        units.append(
            NalUnit(
                offset=sc,
                size=size,
                start_code_len=sc_len,
                nal_type=(b0 >> 1) & 0x3F,
                layer_id=((b0 & 1) << 5) | (b1 >> 3),
                temporal_id_plus1=b1 & 7,
            )
        )
    return tuple(units)


@dataclass(frozen=True)
class SpsInfo:
    sps_id: int
    width: int
    height: int
    ctb_log2: int
    address_bits: int


@dataclass(frozen=True)
class PpsInfo:
    pps_id: int
    sps_id: int
    dependent_slices: bool
    extra_header_bits: int


def _skip_profile_tier_level(r: BitReader, max_sub_layers_minus1: int) -> None:
    r.u(32)  # profile space, tier, idc, first part of compat flags
    r.u(32)  # rest of compat flags, progressive/interlaced/etc
    r.u(24)  # constraint flags
    r.u(8)  # final reserved bit is inside; level follows
    profile_present = []
    level_present = []
    for _ in range(max_sub_layers_minus1):
        profile_present.append(r.u(1))
        level_present.append(r.u(1))
    if max_sub_layers_minus1 > 0:
        for _ in range(max_sub_layers_minus1, 8):
            r.u(2)
    for i in range(max_sub_layers_minus1):
        if profile_present[i]:
            r.u(32)
            r.u(32)
            r.u(24)
        if level_present[i]:
            r.u(8)


def parse_sps(payload: bytes) -> SpsInfo:
    """Minimal SPS parse: geometry and slice-address width only."""
    r = BitReader(strip_emulation_prevention(payload))
    r.u(4)  # video parameter set id
    max_sub_layers_minus1 = r.u(3)
    r.u(1)  # temporal id nesting
    _skip_profile_tier_level(r, max_sub_layers_minus1)
    sps_id = r.ue()
    chroma_format_idc = r.ue()
    if chroma_format_idc == 3:
        r.u(1)
    width = r.ue()
    height = r.ue()
    if width == 0 or height == 0:
        raise ParseError("SPS declares a zero picture dimension")
    if r.u(1):  # conformance window
        r.ue()
        r.ue()
        r.ue()
        r.ue()
    r.ue()  # bit_depth_luma_minus8
    r.ue()  # bit_depth_chroma_minus8
    r.ue()  # log2_max_pic_order_cnt_lsb_minus4
    ordering_present = r.u(1)
    first = 0 if ordering_present else max_sub_layers_minus1
    for _ in range(first, max_sub_layers_minus1 + 1):
        r.ue()
        r.ue()
        r.ue()
    log2_min_cb = r.ue() + 3
    ctb_log2 = log2_min_cb + r.ue()
    if ctb_log2 > 16:
        raise ParseError(f"implausible coding block size 2**{ctb_log2}")
    ctb = 1 << ctb_log2
    pic_size_in_ctbs = -(-width // ctb) * -(-height // ctb)
    address_bits = max(0, math.ceil(math.log2(pic_size_in_ctbs))) if pic_size_in_ctbs > 1 else 0
    return SpsInfo(sps_id, width, height, ctb_log2, address_bits)


def parse_pps(payload: bytes) -> PpsInfo:
    """Minimal PPS parse: the flags that shape the slice header prefix."""
    r = BitReader(strip_emulation_prevention(payload))
    pps_id = r.ue()
    sps_id = r.ue()
    dependent = bool(r.u(1))
    r.u(1)  # output flag present
    extra = r.u(3)
    return PpsInfo(pps_id, sps_id, dependent, extra)


@dataclass
class ParamSetStore:
    """Holds parsed parameter sets; PPS entries must reference a known SPS."""

    sps: dict[int, SpsInfo] = field(default_factory=dict)
    pps: dict[int, PpsInfo] = field(default_factory=dict)

    def put_sps(self, info: SpsInfo) -> None:
        self.sps[info.sps_id] = info

    def put_pps(self, info: PpsInfo) -> None:
        if info.sps_id not in self.sps:
            raise ParseError(f"PPS {info.pps_id} references unknown SPS {info.sps_id}")
        self.pps[info.pps_id] = info

    def resolve(self, pps_id: int) -> tuple[PpsInfo, SpsInfo]:
        if pps_id not in self.pps:
            raise ParseError(f"slice references unknown PPS {pps_id}")
        pps = self.pps[pps_id]
        return pps, self.sps[pps.sps_id]


@dataclass(frozen=True)
class SliceInfo:
    first_in_picture: bool
    dependent: bool
    slice_type: FrameType | None


def parse_slice_header(unit: NalUnit, data: bytes, store: ParamSetStore) -> SliceInfo:
    """Read just enough of a slice header to place and type the slice."""
    rbsp = strip_emulation_prevention(unit.payload(data), limit=192)
    r = BitReader(rbsp)
    first = bool(r.u(1))
    if unit.nal_type in _IRAP_VCL:
        # random access pictures are type I by definition; nothing else needed
        return SliceInfo(first, False, FrameType.I)
    r_pps_id = r.ue()
    pps, sps = store.resolve(r_pps_id)
    dependent = False
    if not first:
        if pps.dependent_slices:
            dependent = bool(r.u(1))
        r.u(sps.address_bits)
    if dependent:
        return SliceInfo(first, True, None)
    r.u(pps.extra_header_bits)
    st = r.ue()
    if st not in _SLICE_TYPES:
        raise ParseError(f"slice_type {st} out of range")
    return SliceInfo(first, False, _SLICE_TYPES[st])


def classify_pictures(
    data: bytes, store: ParamSetStore | None = None
) -> tuple[FrameMeta, ...]:
    """Split a stream into pictures with types and byte-conserving sizes.

    Raises:
        ParseError: malformed units, reserved VCL types, slices before
            any parameter set, or out-of-range slice types.
    """
    units = scan_nal_units(data)
    store = store if store is not None else ParamSetStore()
    pictures: list[list] = []  # [type, size]
    pending = 0
    for unit in units:
        if unit.nal_type in _RESERVED_VCL:
            raise ParseError(f"reserved VCL type {unit.nal_type} at byte {unit.offset}")
        if unit.nal_type >= 32:
            if unit.nal_type == 33:
                store.put_sps(parse_sps(unit.payload(data)))
            elif unit.nal_type == 34:
                store.put_pps(parse_pps(unit.payload(data)))
            pending += unit.size
            continue
        info = parse_slice_header(unit, data, store)
        if info.first_in_picture or not pictures:
            pictures.append([info.slice_type, pending + unit.size])
        else:
            pic = pictures[-1]
            pic[1] += pending + unit.size
            if pic[0] is None:
                pic[0] = info.slice_type
        pending = 0
    if pictures:
        pictures[-1][1] += pending
    metas = []
    for i, (ftype, size) in enumerate(pictures):
        if ftype is None:
            raise ParseError(f"picture {i} has only dependent slices")
        metas.append(FrameMeta(index=i, frame_type=ftype, compressed_size=size))
    return tuple(metas)


def parse_stream(data: bytes) -> tuple[FrameMeta, ...]:
    """One-call form of scan + classify for a whole Annex-B byte string."""
    return classify_pictures(data)
