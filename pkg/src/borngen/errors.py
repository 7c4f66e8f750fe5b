"""Exception types shared across the package."""


class CapabilityError(RuntimeError):
    """Requested operation is outside what this implementation supports
    (wrong kernel/sampling combination, dimension caps, non-diagonal cost
    Hamiltonians, and similar)."""
