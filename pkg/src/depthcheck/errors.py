"""Exception types raised across the package.

Everything derives from DepthcheckError so callers can catch one base class
at an API boundary (the CLI and the HTTP service both do).
"""


class DepthcheckError(Exception):
    """Base class for all errors raised by depthcheck."""


class ParseError(DepthcheckError):
    """Malformed container, bitstream, or sidecar input."""


class TruncatedInputError(ParseError):
    """Input ended before a complete frame or record."""


class SampleRangeError(DepthcheckError):
    """A sample value does not fit the declared bit depth."""


class DomainError(DepthcheckError):
    """An argument is outside the function's valid domain."""


class EmptyCloudError(DepthcheckError):
    """No window qualified for the point cloud (no local detail anywhere)."""


class DegenerateCloudError(DepthcheckError):
    """The point cloud has zero horizontal extent and cannot be binned."""


class SampleTooSmallError(DomainError):
    """A statistical test was given fewer observations than it supports."""


class DegenerateSampleError(DepthcheckError):
    """A statistical test was given data with no variance."""


class DegenerateLabelsError(DepthcheckError):
    """Training labels contain a single class."""


class ShapeError(DepthcheckError):
    """An array has the wrong dimensionality or width."""


class ModelFormatError(DepthcheckError):
    """A serialized model failed validation (magic, version, or checksum)."""


class EmptyInputError(DepthcheckError):
    """A sequence-level operation received zero frames."""


class FeatureError(DepthcheckError):
    """Feature extraction failed for a frame; the message names the channel."""


class FoldError(DepthcheckError):
    """Cross-validation could not build a usable train/validation split."""


class DegenerateScoreError(DepthcheckError):
    """A score is undefined for the given predictions (no positives anywhere)."""


class ConfigError(DepthcheckError):
    """A configuration object failed validation."""
