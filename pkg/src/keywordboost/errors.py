"""Exception hierarchy shared by every stage of the pipeline.

Each class carries the process exit code the CLI reports for it.
"""


class PipelineError(Exception):
    exit_code = 3


class ConfigError(PipelineError):
    exit_code = 2


class DataError(PipelineError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OrderingError(DataError):
    pass


class DomainError(DataError, ValueError):
    pass


class GapError(DataError):
    def __init__(self, boundary):
        self.boundary = boundary
        super().__init__(f"no usable price bar at or before boundary {boundary.isoformat()}")


class VocabularyError(DataError, LookupError):
    pass


class EmptyDocumentError(DataError):
    pass


class EmptyIntervalError(DataError):
    pass


class ShortageError(DataError):
    def __init__(self, achieved, wanted):
        self.achieved = achieved
        self.wanted = wanted
        super().__init__(f"only {achieved} unique keywords available, {wanted} requested")


class StratificationError(DataError):
    pass


class DivergenceError(PipelineError):
    exit_code = 4

    def __init__(self, epoch, value):
        self.epoch = epoch
        super().__init__(f"non-finite cost {value!r} at epoch {epoch}")


class StageError(PipelineError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 3)
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
