import numpy as np
import pytest

from depthcheck.errors import (
    ConfigError,
    ParseError,
    SampleRangeError,
    TruncatedInputError,
)
from depthcheck.frames import Frame, FrameMeta, FrameType, Plane, VideoSequence
from depthcheck.ingest import (
    RawLayout,
    read_frame_metadata,
    read_raw_planar,
    read_y4m,
    write_frame_metadata,
    write_y4m,
)


def random_video(seed, depth=10, w=16, h=12, frames=3, mono=False):
    rng = np.random.default_rng(seed)
    full = 1 << depth
    out = []
    for _ in range(frames):
        if mono:
            planes = (Plane(rng.integers(0, full, (h, w), dtype=np.uint16), depth),)
        else:
            planes = (
                Plane(rng.integers(0, full, (h, w), dtype=np.uint16), depth),
                Plane(rng.integers(0, full, (h // 2, w // 2), dtype=np.uint16), depth),
                Plane(rng.integers(0, full, (h // 2, w // 2), dtype=np.uint16), depth),
            )
        out.append(Frame(planes))
    return VideoSequence(tuple(out))


def assert_same_samples(a: VideoSequence, b: VideoSequence):
    assert len(a) == len(b)
    for fa, fb in zip(a.frames, b.frames):
        for pa, pb in zip(fa.planes, fb.planes):
            assert pa.bit_depth == pb.bit_depth
            np.testing.assert_array_equal(pa.samples, pb.samples)


def test_y4m_round_trip_settings():
    for seed, depth, mono in ((1, 10, False), (2, 8, False), (3, 10, True), (4, 12, False)):
        video = random_video(seed, depth=depth, mono=mono)
        assert_same_samples(read_y4m(write_y4m(video)), video)


def test_y4m_colorspace_tags():
    assert b"C420p10" in write_y4m(random_video(0, depth=10))
    assert b"Cmono10" in write_y4m(random_video(0, depth=10, mono=True))
    assert b"C420jpeg" not in write_y4m(random_video(0, depth=8))  # plain C420


def test_y4m_reads_file_objects(tmp_path):
    video = random_video(9)
    path = tmp_path / "clip.y4m"
    path.write_bytes(write_y4m(video))
    with open(path, "rb") as fh:
        assert_same_samples(read_y4m(fh), video)


def test_y4m_rejects_garbage():
    with pytest.raises(ParseError):
        read_y4m(b"")
    with pytest.raises(ParseError):
        read_y4m(b"MPEG4 W16 H12\nFRAME\n")
    with pytest.raises(ParseError):
        read_y4m(b"YUV4MPEG2 W16 H12 Cwat\nFRAME\n")
    with pytest.raises(ParseError):
        read_y4m(b"YUV4MPEG2 C420p10\nFRAME\n")  # no geometry


def test_y4m_rejects_no_frames():
    head = write_y4m(random_video(1)).split(b"FRAME\n")[0]
    with pytest.raises(ParseError):
        read_y4m(head)


def test_y4m_truncated_payload():
    blob = write_y4m(random_video(1))
    with pytest.raises(TruncatedInputError):
        read_y4m(blob[:-7])


def test_y4m_sample_range_enforced():
    blob = bytearray(write_y4m(random_video(1, depth=10)))
    at = blob.index(b"FRAME\n") + len(b"FRAME\n")
    blob[at:at + 2] = b"\xff\xff"  # 65535 in a 10-bit plane
    with pytest.raises(SampleRangeError):
        read_y4m(bytes(blob))


def test_raw_planar_round_trip():
    video = random_video(6, depth=10, w=16, h=12)
    payload = b"".join(
        plane.samples.astype("<u2").tobytes()
        for frame in video.frames for plane in frame.planes
    )
    layout = RawLayout(width=16, height=12, bit_depth=10, subsampling="420")
    assert_same_samples(read_raw_planar(payload, layout), video)


def test_raw_planar_single_byte_mono():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 256, (12, 16), dtype=np.uint8)
    layout = RawLayout(width=16, height=12, bit_depth=8, subsampling="mono",
                       two_byte=False)
    got = read_raw_planar(a.tobytes() * 2, layout)
    assert len(got) == 2
    np.testing.assert_array_equal(got.frames[0].planes[0].samples, a)


def test_raw_layout_validation():
    with pytest.raises(ConfigError):
        RawLayout(width=16, height=12, bit_depth=10, subsampling="411")
    with pytest.raises(ConfigError):
        RawLayout(width=0, height=12, bit_depth=10)
    with pytest.raises(ConfigError):
        RawLayout(width=16, height=12, bit_depth=10, two_byte=False)


def test_raw_planar_truncation_and_range():
    layout = RawLayout(width=16, height=12, bit_depth=10, subsampling="mono")
    with pytest.raises(TruncatedInputError):
        read_raw_planar(b"\x00" * 100, layout)
    bad = np.full((12, 16), 4096, dtype="<u2").tobytes()
    with pytest.raises(SampleRangeError):
        read_raw_planar(bad, layout)


def test_metadata_round_trip():
    records = tuple(
        FrameMeta(index=i, frame_type=t, compressed_size=100 + i)
        for i, t in enumerate((FrameType.I, FrameType.B, FrameType.B, FrameType.P))
    )
    text = write_frame_metadata(records)
    assert read_frame_metadata(text) == records


def test_metadata_parse_errors():
    for bad in (
        "",
        "frame,type\n0,I\n",
        "index,type,size\n0,X,10\n",
        "index,type,size\n0,I,10\n0,P,10\n",
        "index,type,size\n0,I,-4\n",
        "index,type,size\nzero,I,10\n",
    ):
        with pytest.raises(ParseError):
            read_frame_metadata(bad)
