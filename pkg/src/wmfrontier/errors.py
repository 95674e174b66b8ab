"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: DomainError -> 1, ConfigError -> 2,
TransportError -> 3.
"""


class WmfrontierError(Exception):
    """Base class for all toolkit errors."""


class DomainError(WmfrontierError):
    """Invalid value or operation on otherwise well-formed inputs."""


class CapacityError(DomainError):
    """Input exceeds a documented size cap (e.g. vocabulary too large)."""


class ConfigError(WmfrontierError):
    """Configuration file failed validation.

    `errors` holds one message per offending field path.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class TransportError(WmfrontierError):
    """External backend unreachable, timed out, or misbehaving."""

    def __init__(self, message, request_id=None):
        self.request_id = request_id
        if request_id is not None:
            message = f"{message} (request id: {request_id})"
        super().__init__(message)


class ProtocolError(TransportError):
    """Backend answered, but the response violates the wire protocol."""
