"""Exception hierarchy shared by all modules."""


class Bf2Error(Exception):
    """Base class for all package errors."""


class ConfigError(Bf2Error, ValueError):
    pass


class ParseError(Bf2Error, ValueError):
    pass


class GeometryError(Bf2Error, ValueError):
    pass


class OrderError(Bf2Error, ValueError):
    """Timestamps went backwards."""


class LabelError(Bf2Error, ValueError):
    pass


class LengthError(Bf2Error, ValueError):
    pass


class HistogramError(Bf2Error, ValueError):
    pass


class CostTableError(Bf2Error, KeyError):
    pass


class StreamIOError(Bf2Error, OSError):
    """Reading or writing an event file failed at the OS level."""
