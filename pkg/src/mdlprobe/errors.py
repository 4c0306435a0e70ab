"""Exception hierarchy. Each family maps onto a CLI exit code."""


class MDLError(Exception):
    exit_code = 1


class ConfigError(MDLError, ValueError):
    exit_code = 2


class DataError(MDLError, ValueError):
    exit_code = 3


class InternalError(MDLError, RuntimeError):
    exit_code = 4


class InvalidLabelError(DataError):
    pass


class ZeroProbabilityError(InternalError):
    pass


class ScheduleError(ConfigError):
    pass


class TooSmallPrefixError(DataError):
    pass


class AnnotationMissingError(DataError):
    pass


class NotApplicableError(ConfigError):
    pass


class IncomparableResultsError(ConfigError):
    pass
