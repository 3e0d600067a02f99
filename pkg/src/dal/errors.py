"""Exception hierarchy shared across the package.

Two mid-level bases exist so the CLI can map failures onto exit codes:
``ConfigError`` (bad flags, bad run-config files) and ``DataError``
(bad input files, dimension mismatches). Everything else derives from
``DalError`` directly and is treated as an internal error.
"""


class DalError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DalError):
    """Invalid configuration supplied by the caller (CLI exit code 2)."""


class DataError(DalError):
    """Invalid or inconsistent input data (CLI exit code 3)."""


# dataset
class MalformedCsv(DataError):
    pass


class DuplicateConfiguration(DataError):
    pass


class NonPositivePerformance(DataError):
    pass


class SizeExceedsDataset(DataError):
    pass


class MissingMixedSizeTable(ConfigError):
    pass


# cart
class EmptyTrainingSet(DataError):
    pass


class DepthExceedsTree(DataError):
    pass


class DimensionMismatch(DataError):
    pass


# depth adaptation
class EmptyDivision(DalError):
    pass


class NoPoints(DalError):
    pass


class PointBeyondReference(DalError):
    pass


# local models
class InsufficientSamples(DataError):
    pass


class InvalidSpec(ConfigError):
    pass


# assignment
class NonPartition(DalError):
    pass


class EmptySet(DalError):
    pass


# evaluation
class LengthMismatch(DalError):
    pass


class NonPositiveActual(DataError):
    pass


class EmptyGroup(DalError):
    pass


class TooFewResults(DalError):
    pass


# model documents
class VersionMismatch(DataError):
    pass


class CorruptDocument(DataError):
    pass
