"""Exception hierarchy shared across the pipeline stages."""

from __future__ import annotations


class CohortForgeError(Exception):
    """Base class for every error raised by cohortforge."""


# -- configuration -----------------------------------------------------------

class ConfigError(CohortForgeError):
    """Configuration could not be used (parse, schema, or validation)."""


class ConfigParseError(ConfigError):
    pass


class SchemaError(ConfigError):
    pass


class ValidationError(ConfigError, ValueError):
    pass


class YearOutOfRangeError(CohortForgeError, ValueError):
    pass


class UnknownKeyError(CohortForgeError, LookupError):
    pass


# -- sampling / assembly -----------------------------------------------------

class EmptyCohortError(CohortForgeError, ValueError):
    pass


class ConstraintError(CohortForgeError, RuntimeError):
    """Rejection resampling exhausted its attempt budget."""


class PreconditionError(CohortForgeError, ValueError):
    pass


class AllocationError(CohortForgeError, ValueError):
    pass


class PoolSizeError(CohortForgeError, ValueError):
    pass


# -- records -----------------------------------------------------------------

class RecordParseError(CohortForgeError, ValueError):
    def __init__(self, path, line_no: int, cause: str):
        super().__init__(f"{path}:{line_no}: {cause}")
        self.path = path
        self.line_no = line_no


class RecordSchemaError(CohortForgeError, ValueError):
    pass


class DigestMismatchError(CohortForgeError):
    pass


# -- generation backend ------------------------------------------------------

class BackendError(CohortForgeError):
    pass


class TransientBackendError(BackendError):
    """Retryable failure: timeout, 5xx, rate limiting."""

    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class AuthenticationError(BackendError, ConfigError):
    """Credentials rejected; never retried."""


class ProtocolError(BackendError):
    """The backend (or annotator response) violated the expected format."""


class TransportError(BackendError):
    """Permanent failure after exhausting retries; ``__cause__`` holds the last error."""


class StageError(CohortForgeError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause
