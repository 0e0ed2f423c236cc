"""Typed error hierarchy for the harness.

Every failure mode callers are expected to handle has its own class so tests
and the runner can match on type rather than message text.
"""


class TradebenchError(Exception):
    """Base class for all harness errors."""


# -- market data ---------------------------------------------------------

class MalformedRecord(TradebenchError):
    pass


class NonMonotonicDates(TradebenchError):
    pass


class DuplicateBar(TradebenchError):
    pass


class NonPositivePrice(TradebenchError):
    pass


class SentimentOutOfRange(TradebenchError):
    pass


class UnknownTradingDay(TradebenchError):
    pass


class LookAheadViolation(TradebenchError):
    """A record dated after the gate leaked into a point-in-time view."""


class CalendarTooShort(TradebenchError):
    pass


class OverlappingWindows(TradebenchError):
    pass


# -- strategies ----------------------------------------------------------

class InsufficientHistory(TradebenchError):
    pass


# -- agent protocol ------------------------------------------------------

class ParseError(TradebenchError):
    pass


class InvalidAction(TradebenchError):
    pass


class InvalidQuantity(TradebenchError):
    pass


class EndpointUnavailable(TradebenchError):
    """Network failure after all retries; distinct from unparseable output."""


# -- execution engine ----------------------------------------------------

class MissingBar(TradebenchError):
    pass


# -- metrics -------------------------------------------------------------

class SeriesTooShort(TradebenchError):
    pass


class SeriesMismatch(TradebenchError):
    pass


class DegenerateVolatility(TradebenchError):
    pass


class DegenerateDownside(TradebenchError):
    pass


class DegenerateDenominator(TradebenchError):
    pass


# -- audit ---------------------------------------------------------------

class SignalCoverageGap(TradebenchError):
    pass


class InsufficientModes(TradebenchError):
    pass


class UndefinedInputs(TradebenchError):
    pass


# -- runner / cli --------------------------------------------------------

class ConfigParse(TradebenchError):
    pass


class ConfigInvalid(TradebenchError):
    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(f"invalid config field '{field}'" + (f": {message}" if message else ""))


class TranscriptMissing(TradebenchError):
    pass


class TranscriptCorrupt(TradebenchError):
    pass
