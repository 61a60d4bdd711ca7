"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A solver precondition does not hold for the supplied data.

    ``clause`` names the violated condition so callers (and the CLI) can
    report it without parsing the message.
    """

    def __init__(self, message, clause=None, interval=None):
        super().__init__(message)
        self.clause = clause
        self.interval = interval


class GeometryError(ValueError):
    """Malformed geometric input (non-convex polygon, empty arc, ...)."""
