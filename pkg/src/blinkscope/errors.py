"""Exception types raised across the package."""


class BlinkScopeError(Exception):
    """Base class for every error this package raises on purpose."""


class ShapeError(BlinkScopeError, ValueError):
    pass


class DegenerateGeometryError(BlinkScopeError, ValueError):
    pass


class FormatError(BlinkScopeError, ValueError):
    """A binary or text file could not be parsed.

    ``offset`` is the byte offset (or line number for text formats) at which
    parsing failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(BlinkScopeError, ValueError):
    pass
