"""depthcheck: detects synthesized low-order bits in high bit-depth video.

A video that was up-converted from a lower bit depth carries least-significant
bits that are a function of the rest of the sample (or of nothing at all),
while natively captured high bit-depth content carries sensor noise there.
This package measures that difference and turns it into a calibrated verdict,
including for clips that went through lossy compression afterwards.
"""

__version__ = "0.1.0"

from .config import RunConfig
from .detector import DetectorBundle, Verdict, assemble_features, detect
from .errors import DepthcheckError
from .features import frame_feature_vector, plane_features
from .frames import Frame, FrameMeta, FrameType, Plane, VideoSequence
from .hevc import parse_stream
from .ingest import read_raw_planar, read_y4m, write_y4m
from .pipeline import cross_validate_detector, load_corpus, train_detector

__all__ = [
    "DepthcheckError",
    "DetectorBundle",
    "Frame",
    "FrameMeta",
    "FrameType",
    "Plane",
    "RunConfig",
    "Verdict",
    "VideoSequence",
    "__version__",
    "assemble_features",
    "cross_validate_detector",
    "detect",
    "frame_feature_vector",
    "load_corpus",
    "parse_stream",
    "plane_features",
    "read_raw_planar",
    "read_y4m",
    "train_detector",
    "write_y4m",
]
