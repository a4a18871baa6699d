"""
Domain exceptions.

Every error raised by the solver services derives from SchedulingError so the
CLI can map it to exit code 1 and the API to a 422 envelope. `code` is the
stable machine-readable identifier used in the error envelope.
"""
from typing import Optional


class SchedulingError(Exception):
    code = "scheduling_error"
    status_code = 422

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__

    @property
    def details(self) -> Optional[dict]:
        """Structured context for the error envelope, None when there is none."""
        return None


class MalformedDiagram(SchedulingError):
    code = "malformed_diagram"


class AbsentTransition(SchedulingError):
    """A label references a transition the diagram does not have."""

    code = "absent_transition"

    def __init__(self, message: str = "", interval: Optional[int] = None):
        super().__init__(message)
        self.interval = interval

    @property
    def details(self) -> Optional[dict]:
        return None if self.interval is None else {"interval": self.interval}


class NoProcessingWindow(SchedulingError):
    """The machine can never process within the horizon."""

    code = "no_processing_window"

    def __init__(self, message: str = "", h_first: Optional[int] = None, h_last: Optional[int] = None):
        super().__init__(message)
        self.h_first = h_first
        self.h_last = h_last

    @property
    def details(self) -> Optional[dict]:
        if self.h_first is None:
            return None
        return {"h_first": self.h_first, "h_last": self.h_last}


class MalformedBehavior(SchedulingError):
    code = "malformed_behavior"


class InfeasibleSequence(SchedulingError):
    code = "infeasible_sequence"


class EmptyJoinStack(SchedulingError):
    code = "empty_join_stack"


class InfeasibleRelaxation(SchedulingError):
    code = "infeasible_relaxation"


class ReconstructionMismatch(SchedulingError):
    # raised when a stitched schedule fails validation; indicates a bug
    code = "reconstruction_mismatch"
    status_code = 500


class ProfileTooShort(SchedulingError):
    code = "profile_too_short"


class PriceParseError(SchedulingError):
    code = "price_parse_error"

    def __init__(self, message: str = "", row: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message)
        self.row = row
        self.column = column

    @property
    def details(self) -> Optional[dict]:
        return {"row": self.row, "column": self.column}


class TooLarge(SchedulingError):
    code = "too_large"
