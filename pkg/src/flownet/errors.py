"""Exception hierarchy shared across the package."""


class FlownetError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(FlownetError):
    """A network, vector, or file violates a structural invariant."""


class ParseError(FlownetError):
    """A network spec file is malformed.

    Carries the 1-based line number when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoMatchingError(FlownetError):
    """The terminal in/outflows cannot be realized as steady edge flows."""


class InfeasibleError(FlownetError):
    """No circulation exists within the constraint intervals."""


class NotWeaklyConnectedError(FlownetError):
    """Operation requires a weakly connected network."""


class DecompositionError(FlownetError):
    """Internal consistency failure while peeling circuits off a circulation."""


class NotApplicableError(FlownetError):
    """Requested construction does not apply to this verdict."""


class CircuitCapError(FlownetError):
    """Directed-cycle enumeration exceeded the configured output cap."""


class NonFiniteStateError(FlownetError):
    """Integration produced a non-finite state entry (step too large)."""
