class ConfigurationError(ValueError):
    """The scenario, trace or settings describe something we cannot model."""


class DimensionError(ValueError):
    """Two matrices or vectors that must agree in shape do not."""


class ScaleGuardError(ValueError):
    """An exact oracle was asked to work above the size it can enumerate."""


class PmrUnreachableError(ValueError):
    """No exponent rescaling reaches the requested peak-to-mean ratio."""


class PatternSpaceError(RuntimeError):
    """Pattern enumeration or the packing search exceeded its budget."""


class InfeasiblePackingError(RuntimeError):
    """The instance counts do not fit into the cluster."""


class ClusterOverloadedError(InfeasiblePackingError):
    """A slot's demand cannot be packed into the servers."""

    def __init__(self, message: str, slot: int | None = None):
        super().__init__(message)
        self.slot = slot


class PreplanExceededError(RuntimeError):
    """Demand exceeds the pre-planned maximum placement."""

    def __init__(self, message: str, slot: int | None = None):
        super().__init__(message)
        self.slot = slot


class RoutingInfeasibleError(RuntimeError):
    """A chain stage receives traffic but has no deployed instances."""


class InvariantViolation(AssertionError):
    """A placement trajectory broke coverage, capacity or no-migration."""
