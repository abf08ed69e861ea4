"""Exception types shared across the package."""


class GirBenchError(Exception):
    """Base class for all package errors."""


class UnsupportedFormat(GirBenchError):
    pass


class CorruptStream(GirBenchError):
    pass


class InvalidParam(GirBenchError):
    pass


class DimensionMismatch(GirBenchError):
    pass


class ImageTooSmall(GirBenchError):
    pass


class LengthMismatch(GirBenchError):
    pass


class ParseError(GirBenchError):
    pass


class SchemaVersionMismatch(ParseError):
    pass


class TaskSetMismatch(GirBenchError):
    pass


class MissingOutput(GirBenchError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__("missing output files: " + ", ".join(self.missing))


class NotSymmetric(GirBenchError):
    pass


class DegenerateMatrix(GirBenchError):
    pass
