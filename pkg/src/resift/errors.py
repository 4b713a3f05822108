"""Exception hierarchy. Everything user-facing derives from ResiftError so the
CLI can map input problems to exit code 2 in one place."""


class ResiftError(Exception):
    """Base class for all errors raised by this package."""


class UnsupportedFormat(ResiftError):
    pass


class CorruptFile(ResiftError):
    pass


class ImageTooSmall(ResiftError):
    pass


class IoFailure(ResiftError):
    pass


class SizeMismatch(ResiftError):
    pass


class InvalidSpec(ResiftError):
    pass


class KernelTooLarge(ResiftError):
    pass


class DimensionMismatch(ResiftError):
    pass


class EmptyDistances(ResiftError):
    pass


class MalformedRow(ResiftError):
    pass


class UnknownCategory(ResiftError):
    pass


class DuplicatePair(ResiftError):
    pass


class DegenerateData(ResiftError):
    pass


class ConfigError(ResiftError):
    pass


class BenchmarkAborted(ResiftError):
    pass
