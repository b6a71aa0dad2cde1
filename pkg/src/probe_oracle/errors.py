"""Exception hierarchy.

Everything raised on bad input derives from DataError so the CLI can map it
to a single exit code; programming mistakes inside the package stay plain
exceptions and surface as internal errors.
"""


class ProbeOracleError(Exception):
    pass


class DataError(ProbeOracleError):
    """Invalid input data or parameters (CLI exit code 2)."""


class MalformedFile(DataError):
    pass


class ValueOutOfRange(DataError):
    pass


class DuplicateKey(DataError):
    pass


class MissingCell(DataError):
    pass


class ModelMismatch(DataError):
    pass


class NonFinite(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class TooFewModels(DataError):
    pass


class DegenerateControl(DataError):
    pass


class InsufficientDof(DataError):
    pass


class InvalidDof(DataError):
    pass


class UnknownTask(DataError):
    pass


class NoSignificantLayer(DataError):
    pass


class CapExceeded(DataError):
    pass


class KTooLarge(DataError):
    pass


class DegenerateData(DataError):
    pass


class InsufficientSamples(DataError):
    pass


class NonConvergence(DataError):
    pass
