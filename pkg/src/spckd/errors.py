"""Exception hierarchy shared by all spckd modules."""


class SpckdError(Exception):
    """Base class for every error raised by spckd."""


class ConfigError(SpckdError, ValueError):
    """Invalid configuration value or inconsistent settings."""


class ShapeError(SpckdError, ValueError):
    """Tensor shapes do not agree with the operation's contract."""


class FormatError(SpckdError, ValueError):
    """A binary or text artifact could not be parsed.

    Args:
        message: Human readable description
        offset: Byte offset at which parsing failed, when known
        name: Name of the offending tensor or field, when known
    """

    def __init__(self, message: str, offset: int | None = None, name: str | None = None) -> None:
        details = []
        if name is not None:
            details.append(f"tensor={name}")
        if offset is not None:
            details.append(f"offset={offset}")
        suffix = f" ({', '.join(details)})" if details else ""
        super().__init__(f"{message}{suffix}")
        self.offset = offset
        self.name = name


class UsageError(SpckdError, RuntimeError):
    """An API was called out of order (e.g. a tape replayed twice)."""


class NumericalError(SpckdError, FloatingPointError):
    """An operation produced NaN or Inf."""
