"""Exception types shared across the harness."""


class WorldLoopError(Exception):
    """Base class for all harness errors."""


# environment
class UnknownGame(WorldLoopError):
    pass


class SessionFinished(WorldLoopError):
    pass


class IllegalAction(WorldLoopError):
    pass


# wire protocol
class WireError(WorldLoopError):
    code = "WireError"


class MalformedMessage(WireError):
    code = "MalformedMessage"


class UnknownOp(WireError):
    code = "UnknownOp"


class SchemaViolation(WireError):
    code = "SchemaViolation"


class UnknownSession(WireError):
    code = "UnknownSession"


# trace store
class OutOfOrder(WorldLoopError):
    pass


class IoFailure(WorldLoopError):
    pass


class CorruptRecord(WorldLoopError):
    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class ChainViolation(CorruptRecord):
    pass


# external model subprocess
class SpawnFailure(WorldLoopError):
    pass


class CallTimeout(WorldLoopError):
    pass


class ProtocolViolation(WorldLoopError):
    pass


# model files
class ModelFormatError(WorldLoopError):
    pass


# modelers
class IrreconcilableObservations(WorldLoopError):
    pass


# scoring
class InvalidCounts(WorldLoopError):
    pass


class EmptyInput(WorldLoopError):
    pass
