"""Exceptions raised by opengke"""


class GKEError(Exception):
    """Base class for every error raised by this package"""


## Group backend ##


class ParameterError(GKEError, ValueError):
    """Group parameters or scalars failed validation"""


class MembershipError(GKEError, ValueError):
    """A residue is not a member of the order-q subgroup"""


class NonInvertibleError(GKEError, ArithmeticError):
    """A scalar has no inverse modulo q"""


## Protocol state machines ##


class ProtocolError(GKEError):
    pass


class IncompleteRosterError(ProtocolError):
    pass


class InconsistencyError(ProtocolError):
    """A partial sent by a member does not match the published keys"""


class NoSlotError(ProtocolError):
    pass


class NotAMemberError(ProtocolError):
    pass


class InvalidEvictionError(ProtocolError):
    pass


class EmptyRosterError(ProtocolError):
    pass


class RosterConflictError(ProtocolError):
    pass


class DegenerateJoinError(ProtocolError):
    pass


class VariantMismatchError(ProtocolError):
    """A message from one chain shape was handed to the other's formulas"""


class DegenerateKeyError(ProtocolError):
    pass


## Adversary ##


class AttackInapplicableError(GKEError):
    """n - 2 has no inverse modulo q"""


class DegenerateError(GKEError):
    pass


## Simulation ##


class RoutingError(GKEError):
    pass


class ScenarioError(GKEError):
    """A scenario failed validation or aborted while running.

    Attributes:
        index (int): position of the offending event in the script, or None
        cause (Exception): underlying error, if any
    """

    def __init__(self, message, index=None, cause=None):
        if index is not None:
            message = 'event %i: %s' % (index, message)
        GKEError.__init__(self, message)
        self.index = index
        self.cause = cause


class InvariantViolation(GKEError):
    def __init__(self, message, dump=None):
        GKEError.__init__(self, message)
        self.dump = dump or {}


class TranscriptParseError(GKEError):
    def __init__(self, message, line=None):
        if line is not None:
            message = 'line %i: %s' % (line, message)
        GKEError.__init__(self, message)
        self.line = line


class WireError(GKEError, ValueError):
    """A wire payload is structurally malformed"""
