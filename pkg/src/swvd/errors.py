"""Exception hierarchy shared by all modules."""


class SwvdError(Exception):
    """Base class for solver errors."""


class InvalidArgumentError(SwvdError, ValueError):
    pass


class InvalidDataError(SwvdError, ValueError):
    pass


class MeshError(SwvdError):
    pass


class ConfigError(SwvdError, ValueError):
    pass


class InterfaceTooWideError(SwvdError):
    """No single-fluid cell close enough to a mixed cell (under-resolved interface)."""


class PositivityError(SwvdError):
    pass


class ReportError(SwvdError):
    pass
