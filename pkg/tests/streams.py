"""Hand-assembled Annex-B micro-streams for the parser tests.

Each builder writes exactly the fields the parser reads, in the same
order, so a failing test points at a header field instead of a byte
offset. Geometry defaults give a single 64-pixel coding tree block,
which makes the slice address zero bits wide.
"""

from __future__ import annotations

from depthcheck.hevc import BitWriter, insert_emulation_prevention

TRAIL = 1       # plain non-IRAP slice
IDR = 19        # random access slice, type I by definition
SPS = 33
PPS = 34
SEI = 39        # non-VCL unit used to test size attribution

_SLICE_CODE = {"B": 0, "P": 1, "I": 2}


def nal(nal_type: int, rbsp: bytes, four_byte: bool = False) -> bytes:
    header = bytes([(nal_type << 1) & 0x7E, 1])
    start = b"\x00\x00\x00\x01" if four_byte else b"\x00\x00\x01"
    return start + header + insert_emulation_prevention(rbsp)


def sps_rbsp(sps_id: int = 0, width: int = 64, height: int = 64,
             ctb_log2: int = 6, chroma_format_idc: int = 1) -> bytes:
    w = BitWriter()
    w.u(0, 4)        # video parameter set id
    w.u(0, 3)        # max_sub_layers_minus1
    w.u(1, 1)        # temporal id nesting
    w.u(0, 32).u(0, 32).u(0, 24).u(0, 8)  # profile tier level block
    w.ue(sps_id)
    w.ue(chroma_format_idc)
    if chroma_format_idc == 3:
        w.u(0, 1)
    w.ue(width)
    w.ue(height)
    w.u(0, 1)        # no conformance window
    w.ue(2)          # bit_depth_luma_minus8
    w.ue(2)          # bit_depth_chroma_minus8
    w.ue(4)          # log2_max_pic_order_cnt_lsb_minus4
    w.u(1, 1)        # sub-layer ordering info present
    w.ue(4).ue(0).ue(0)
    w.ue(0)          # log2_min_luma_coding_block_size_minus3
    w.ue(ctb_log2 - 3)
    return w.rbsp_trailing().to_bytes()


def pps_rbsp(pps_id: int = 0, sps_id: int = 0, dependent: bool = False,
             extra_bits: int = 0) -> bytes:
    w = BitWriter()
    w.ue(pps_id)
    w.ue(sps_id)
    w.u(1 if dependent else 0, 1)
    w.u(0, 1)        # output flag present
    w.u(extra_bits, 3)
    return w.rbsp_trailing().to_bytes()


def slice_rbsp(slice_type: str = "P", first: bool = True, pps_id: int = 0,
               address: int = 0, address_bits: int = 0, dependent: bool = False,
               dependent_flag_present: bool = False, extra_bits: int = 0,
               pad: int = 0, raw_type: int | None = None) -> bytes:
    w = BitWriter()
    w.u(1 if first else 0, 1)
    w.ue(pps_id)
    if not first:
        if dependent_flag_present:
            w.u(1 if dependent else 0, 1)
        if address_bits:
            w.u(address, address_bits)
    if not dependent:
        if extra_bits:
            w.u(0, extra_bits)
        w.ue(_SLICE_CODE[slice_type] if raw_type is None else raw_type)
    return w.rbsp_trailing().to_bytes() + b"\xa5" * pad


def stream(types: str, pads=None, width: int = 64, height: int = 64,
           four_byte_first: bool = True) -> bytes:
    """SPS + PPS + one single-slice picture per letter of ``types``."""
    chunks = [
        nal(SPS, sps_rbsp(width=width, height=height), four_byte=four_byte_first),
        nal(PPS, pps_rbsp()),
    ]
    for i, t in enumerate(types):
        pad = 0 if pads is None else pads[i]
        ntype = IDR if (t == "I" and i == 0) else TRAIL
        chunks.append(nal(ntype, slice_rbsp(slice_type=t, pad=pad)))
    return b"".join(chunks)
