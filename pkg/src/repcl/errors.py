"""Exception types shared across the repcl package."""
from __future__ import annotations


class RepClError(Exception):
    """Base class for all repcl errors."""


class ConfigError(RepClError):
    """Clock configuration violates a structural constraint."""


class InvalidShiftError(RepClError):
    """Attempted to shift a timestamp backwards (newmx < mx)."""


class IncompatibleTimestampError(RepClError):
    """Timestamp does not fit the clock configuration it is used with."""


class EncodingOverflowError(RepClError):
    """A field does not fit its packed bit lane or word."""


class TraceFormatError(RepClError):
    """A trace file could not be parsed.

    ``line`` is the 1-based line number of the offending record when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TraceCycleError(RepClError):
    """The order constraints of a trace contain a cycle.

    ``pair`` names two events on the cycle (keys, predecessor first).
    """

    def __init__(self, message: str, pair: tuple[str, str] | None = None):
        self.pair = pair
        super().__init__(message)


class ReplayChoiceError(RepClError):
    """A chosen event is not currently replayable.

    ``violated_constraint`` describes the blocking predecessor or hard edge.
    """

    def __init__(self, message: str, violated_constraint: str):
        self.violated_constraint = violated_constraint
        super().__init__(message)


class ReplayBoundError(RepClError):
    """Exhaustive enumeration refused because the trace is too large."""


class SimulationInvariantError(RepClError):
    """A runtime invariant of the simulator was violated."""
