"""Exception hierarchy mapped to CLI exit codes.

Exit code convention: 0 success, 2 usage, 3 I/O, 4 validation,
5 external-service failure.
"""


class SigdistillError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class UsageError(SigdistillError):
    """Bad flags, bad teacher spec, missing required configuration."""

    exit_code = 2


class ArtifactError(SigdistillError):
    """Missing, unreadable, or malformed artifact files."""

    exit_code = 3


class ValidationError(SigdistillError):
    """Inputs that parse but violate a documented contract."""

    exit_code = 4


class ExternalServiceError(SigdistillError):
    """Remote endpoint unreachable, persistent transport failure."""

    exit_code = 5


class AuthenticationError(ExternalServiceError):
    """Endpoint rejected the credentials; never retried."""
