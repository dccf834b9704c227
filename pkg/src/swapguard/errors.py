"""Exception types shared across the package."""


class FeasibilityError(ValueError):
    """The requested on-time blocks cannot fit inside the horizon."""


class RejectionCapError(RuntimeError):
    """Rejection sampling exceeded its attempt budget."""


class DimensionCapError(ValueError):
    """A joint Hilbert-space dimension exceeds the configured cap."""


class QuorumError(ValueError):
    """Not enough (or inconsistent) shares to reconstruct a secret."""
