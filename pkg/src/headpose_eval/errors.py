from typing import Any, Optional


class PoseEvalError(Exception):
    """Base class for all errors raised by headpose_eval."""


class InvalidArgumentError(PoseEvalError, ValueError):
    """An argument violates the documented preconditions."""


class DegenerateRepresentationError(InvalidArgumentError):
    """A 6D representation whose columns cannot be orthonormalized."""


class EmptyInputError(InvalidArgumentError):
    """An operation that needs at least one element received none."""


class FitInfeasibleError(InvalidArgumentError):
    """Opal parameters cannot be fitted to the given error samples."""


class IllConditionedInputError(InvalidArgumentError):
    """Rotations are too dispersed for a unique Karcher mean."""


class InputFileError(InvalidArgumentError):
    """A pose file could not be parsed or holds an invalid row.

    Attributes:
        path: File being read
        line: 1-based line number of the offending row, if known
        row_id: Sample id of the offending row, if known
    """

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        row_id: Optional[str] = None,
    ) -> None:
        location = []
        if path is not None:
            location.append(str(path))
        if line is not None:
            location.append(f"line {line}")
        if row_id is not None:
            location.append(f"id {row_id!r}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.path = path
        self.line = line
        self.row_id = row_id


class ConvergenceError(PoseEvalError, RuntimeError):
    """An iterative procedure stopped before reaching its tolerance.

    Attributes:
        last_iterate: Last estimate produced before giving up
        iterations: Number of iterations performed
        step_norm: Norm of the last step, in radians
    """

    def __init__(self, message: str, last_iterate: Any, iterations: int, step_norm: float) -> None:
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations
        self.step_norm = step_norm


class ReportWriteError(PoseEvalError, OSError):
    """A report or pose file could not be written."""

    def __init__(self, path: str, cause: Exception) -> None:
        super().__init__(f"Could not write {path}: {cause}")
        self.path = path
