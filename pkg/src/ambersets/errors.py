"""Exception types shared across the pipeline."""


class AmberError(Exception):
    """Base class for pipeline errors."""


class ParseError(AmberError, ValueError):
    """A malformed input record. Carries the 1-based line number when known."""

    def __init__(self, message, lineno=None, source=None):
        self.lineno = lineno
        self.source = source
        where = []
        if source is not None:
            where.append(str(source))
        if lineno is not None:
            where.append(f"line {lineno}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ConfigError(AmberError):
    """Bad configuration: missing paths, malformed templates, unknown formats."""


class ContractError(AmberError, ValueError):
    """A caller broke an operation's precondition."""


class RunValidationError(AmberError, ValueError):
    """An external retriever run failed validation against the known queries."""
