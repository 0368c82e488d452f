"""Exception types shared across the package.

Everything raised on bad input derives from TrackVidError so callers (CLI,
service) can map the whole family to exit codes / HTTP statuses in one place.
File parsers raise FormatError subclasses; numeric/geometric preconditions
raise the flat ones.
"""


class TrackVidError(Exception):
    """Base class for all input/precondition failures in this package."""


# --- geometry / numeric preconditions ---------------------------------------


class NonPositiveDepth(TrackVidError):
    """A depth map sample is zero, negative, or non-finite."""


class NonPositiveZ(TrackVidError):
    """A point handed to the colorizer has camera z <= 0."""


class GridTooLarge(TrackVidError):
    """Requested sampling grid exceeds the image dimensions."""


class NonUnitQuaternion(TrackVidError):
    """Quaternion norm is too far from 1 to be a rounding artifact."""


class SizeMismatch(TrackVidError):
    """Two per-point arrays disagree on the number of points."""


class FrameOutOfRange(TrackVidError):
    """Frame index is outside [0, T)."""


class LengthMismatch(TrackVidError):
    """Two per-frame sequences disagree on the number of frames."""


class DimensionMismatch(TrackVidError):
    """Two images/videos disagree on shape."""


# --- builders ----------------------------------------------------------------


class ZeroFrames(TrackVidError):
    """A trajectory or timeline was asked for fewer than two frames."""


class BadKeyframes(TrackVidError):
    """Keyframes are empty, unsorted, duplicated, or out of range."""


class MissingSourcePixels(TrackVidError):
    """Operation needs pixel provenance but the point cloud has none."""


class NoForegroundPoints(TrackVidError):
    """The object mask selects no points of the cloud."""


class EmptyMesh(TrackVidError):
    """Mesh has no faces, no vertices, or zero total surface area."""


# --- metrics -----------------------------------------------------------------


class TooFewCorrespondences(TrackVidError):
    """Fewer than 8 point correspondences were supplied."""


class DegenerateConfiguration(TrackVidError):
    """Correspondences admit no cheirality-consistent relative pose."""


# --- toy conditioning model ---------------------------------------------------


class BadConfig(TrackVidError):
    """Model configuration violates a structural constraint."""


class NotAttached(TrackVidError):
    """Conditioned pass or training requested before the condition
    branch was attached."""


# --- file formats -------------------------------------------------------------


class FormatError(TrackVidError):
    """Base class for structured file-format failures."""


class BadMagic(FormatError):
    """Leading magic bytes do not identify the expected format."""


class TruncatedFile(FormatError):
    """File ends before the length implied by its own header."""


class VersionUnsupported(FormatError):
    """Version field or feature flags outside what this reader handles."""


class TopologyMismatch(FormatError):
    """Mesh frames in a sequence disagree on vertex count or face list."""


class NonFiniteValue(FormatError):
    """NaN or infinity where the format requires finite numbers."""


class NegativeDepth(FormatError):
    """Depth file contains values <= 0."""
