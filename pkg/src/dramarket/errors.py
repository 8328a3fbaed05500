"""Exception hierarchy shared by all modules."""


class DRMarketError(Exception):
    """Base class for every error raised by this package."""


class DomainError(DRMarketError, ValueError):
    """An argument lies outside the domain of a cost or payoff function."""


class CalibrationError(DRMarketError, ValueError):
    """Cost samples cannot determine the battery coefficients."""


class InfeasibleScheduleError(DRMarketError):
    """No on/off schedule keeps the tank inside its temperature band.

    ``slot`` is the first 15-minute slot at which every candidate schedule
    leaves the band.
    """

    def __init__(self, message: str, slot: int):
        super().__init__(message)
        self.slot = slot


class ClearingError(DRMarketError):
    """The market-clearing system has no well-defined solution."""


class ConfigError(DRMarketError, ValueError):
    """A configuration file is malformed or violates the schema.

    ``field`` names the offending entry (dotted path) when known.
    """

    def __init__(self, message: str, field: str | None = None):
        if field:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field
