"""Exception types shared across the package."""


class HairlineError(Exception):
    """Base class for all package-specific errors."""


class InvalidGeometryError(HairlineError):
    """A polygon or chain violates its geometric contract."""


class ContractError(HairlineError):
    """A caller violated an operation precondition (wrong frame, stale
    cache, shape mismatch, out-of-bounds tile, ...)."""


class ImageTooSmallError(HairlineError):
    """Image is smaller than the tile size in at least one dimension."""


class NumericError(HairlineError):
    """Non-finite values where finite ones are required."""


class WeightsIOError(HairlineError):
    """Weight file is corrupt or truncated."""


class SpecMismatchError(WeightsIOError):
    """Weight file was saved for a different model spec."""


class IngestError(HairlineError):
    """Inspection directory could not be ingested; message itemizes
    the offending files."""


class SplitError(HairlineError):
    """Dataset cannot be split as requested (e.g. fewer than 2 turbines)."""
