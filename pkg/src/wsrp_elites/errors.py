"""Exception types shared by the solver modules."""


class WsrpError(Exception):
    """Base class for all package errors."""


class InstanceError(WsrpError, ValueError):
    """An instance file or generator config is malformed.

    ``path`` is a JSON-pointer-like location of the offending field, when known.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InfeasibleVisitError(WsrpError):
    """A visit cannot be served even as the only member of a fresh journey, in either mode."""

    def __init__(self, visit: int):
        self.visit = visit
        super().__init__(f"visit {visit} cannot start inside its time window from the depot by car or public transport")


class ConfigError(WsrpError, ValueError):
    """An algorithm or archive configuration violates its invariants."""
