"""Exception hierarchy shared by every module.

Each class carries the process exit code the CLI maps it to.
"""


class LabError(Exception):
    exit_code = 1


class ConfigurationError(LabError, ValueError):
    """A parameter violates an operation's preconditions."""

    exit_code = 65


class DomainError(LabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    exit_code = 65


class UnreliableInputError(LabError, ValueError):
    """The requested scale is below what the discretization can resolve."""

    exit_code = 65


class ResourceError(LabError, MemoryError):
    exit_code = 65


class UsageError(LabError):
    exit_code = 64
