"""Exception types shared across the engine."""


class DimensionError(ValueError):
    """Array shapes are incompatible for the requested operation."""


class OutOfExtentError(ValueError):
    """A box or region lies fully outside the addressable extent."""


class NoCandidatesError(RuntimeError):
    """An operation that needs at least one candidate received none."""


class UninitializedError(RuntimeError):
    """State was queried before its first update."""


class FormatError(ValueError):
    """A serialized payload does not match the expected layout."""
