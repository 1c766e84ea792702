"""Exception hierarchy shared by all armcast modules."""


class ArmcastError(Exception):
    """Base class for every error raised by this package."""


class DecodeError(ArmcastError):
    """Malformed raster file."""


class BoundsError(ArmcastError):
    """A region does not fit inside its frame."""


class ParameterError(ArmcastError, ValueError):
    """Invalid numeric parameter."""


class NoContrastError(ArmcastError):
    """Histogram has no usable valley between two modes."""


class PoseError(ArmcastError):
    """Calibration frame does not show the expected pose."""


class DetectionError(ArmcastError):
    """Keypoints could not be located in a frame."""


class DomainError(ArmcastError):
    """Joint angles outside their limits."""


class FramingError(ArmcastError):
    """Rendered figure does not fit the requested frame."""


class OrientationError(ArmcastError):
    """Zero-length limb vector, orientation undefined."""


class WireError(ArmcastError):
    """Base class for wire-format errors."""


class RangeError(WireError):
    """Angle not representable in centidegrees."""


class BadMagicError(WireError):
    """Message does not start with the magic bytes."""


class CorruptionError(WireError):
    """CRC mismatch."""


class VersionError(WireError):
    """Unknown protocol version."""


class SessionError(WireError):
    """Transport failure during a streaming session."""
