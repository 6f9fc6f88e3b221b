"""Exception hierarchy shared across the package.

Every error raised by famdiff derives from FamdiffError so callers (and the
CLI) can map failures to a stable exit code.
"""


class FamdiffError(Exception):
    """Base class for all famdiff errors."""


class SizeError(FamdiffError):
    """Grid or kernel dimensions are invalid or incompatible."""


class ParameterError(FamdiffError):
    """A scalar parameter is outside its documented domain."""


class SingularityError(ParameterError):
    """An update formula would divide by a vanishing schedule quantity."""


class SpectralAsymmetryError(FamdiffError):
    """An inverse transform produced a non-negligible imaginary part.

    This signals a corrupted (asymmetric) filter or spectrum, not roundoff.
    """


class NumericError(FamdiffError):
    """Non-finite values where finite ones are required."""


class ShapeError(FamdiffError):
    """Array shapes do not match the operation's contract."""


class CapacityError(FamdiffError):
    """A configured memory or token cap would be exceeded."""


class PairingError(FamdiffError):
    """A replayed attention record has no matching captured record."""


class FormatError(FamdiffError):
    """A serialized artifact does not follow its wire format."""


class BenchError(FamdiffError):
    """The benchmark harness cannot produce trustworthy numbers."""
