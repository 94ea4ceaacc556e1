"""Exception types shared across the package."""


class GraphQAError(Exception):
    """Base class for all package errors."""


class ArgumentError(GraphQAError, ValueError):
    """A caller violated an operation precondition."""


class NotFoundError(GraphQAError, LookupError):
    """An entity, relation, or id reference does not resolve."""


class ParseError(GraphQAError):
    """A data file is malformed; carries the offending location."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = f"{path}:{line}: " if path is not None and line is not None else ""
        super().__init__(f"{where}{message}")


class ExhaustionError(GraphQAError):
    """Negative sampling ran out of candidate corruptions."""


class NumericalError(GraphQAError):
    """Training produced a non-finite value."""

    def __init__(self, message: str, *, epoch: int | None = None, index: int | None = None):
        self.epoch = epoch
        self.index = index
        super().__init__(message)


class GenerationError(GraphQAError):
    """A question pattern could not be sampled from the graph."""

    def __init__(self, qtype: str, message: str):
        self.qtype = qtype
        super().__init__(f"{qtype}: {message}")


class ConfigError(GraphQAError):
    """Bad configuration file or flag value."""


class GatewayError(GraphQAError):
    """Base class for chat endpoint failures."""


class GatewayTimeoutError(GatewayError):
    """The endpoint did not answer within the deadline or was unreachable."""


class ProviderError(GatewayError):
    """The endpoint answered with a non-2xx status."""

    def __init__(self, status: int, snippet: str):
        self.status = status
        self.snippet = snippet
        super().__init__(f"provider returned {status}: {snippet}")


class ProtocolError(GatewayError):
    """The endpoint answered with a body we cannot interpret."""
