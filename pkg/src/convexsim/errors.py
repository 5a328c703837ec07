"""Exception taxonomy shared by all convexsim modules."""


class ConvexsimError(Exception):
    """Base class for all errors raised by this package."""


class InputError(ConvexsimError):
    """Malformed or out-of-domain input (bad identifiers, broken axioms, bad files)."""


class CapacityError(ConvexsimError):
    """Input exceeds a documented brute-force cap."""


class PreconditionError(ConvexsimError):
    """A caller violated an operation's stated precondition."""


class ProtocolViolationError(ConvexsimError):
    """A protocol step became undefined; happens only when a scenario breaks
    the protocol's resilience precondition."""
