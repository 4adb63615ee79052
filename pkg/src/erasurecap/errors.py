"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ConfigError -> 2,
PreconditionError -> 3, ResourceLimitError -> 4.
"""


class ErasureCapError(Exception):
    """Base class for all library errors."""


class ConfigError(ErasureCapError):
    """Malformed or out-of-domain configuration input."""


class PreconditionError(ErasureCapError):
    """An operation was called outside its documented precondition."""


class ResourceLimitError(ErasureCapError):
    """A documented size/cost cap was exceeded."""
