"""Exception hierarchy shared across the pipeline."""


class EduKGError(Exception):
    """Base class for all pipeline errors."""


class ConfigurationError(EduKGError):
    """Invalid configuration value or unsupported format/option."""


class ParseError(EduKGError):
    """Malformed input data (JSON or XML)."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class NotFoundError(EduKGError):
    """Requested record, job, or material does not exist."""


class DataError(EduKGError):
    """Store contents violate an invariant (e.g. a redirect cycle)."""


class ContractViolation(EduKGError):
    """Caller broke a documented precondition."""


class TransportError(EduKGError):
    """A remote dependency could not be reached (retryable at job level)."""


class LinkerUnavailableError(TransportError):
    """Entity-linking service failed after retries."""


class ConflictError(EduKGError):
    """Operation conflicts with existing state (duplicate id, stopped session)."""


class EmptyGraphError(EduKGError):
    """Sampling requested from a graph with no edges."""
