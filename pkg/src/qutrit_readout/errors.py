"""Exception types raised by the readout simulator."""


class ReadoutError(Exception):
    """Base class for simulator errors."""


class DimensionError(ReadoutError, ValueError):
    """Operands have incompatible shapes."""


class TruncationError(ReadoutError):
    """Fock truncation is too small for the requested cavity amplitudes."""


class StepGuardError(ReadoutError):
    """Time step too large for the diffusive limit."""


class NumericalGuardError(ReadoutError):
    """A numerical invariant (trace, hermiticity, positivity) was violated."""


class ConfigError(ReadoutError, ValueError):
    """Invalid scenario configuration."""
