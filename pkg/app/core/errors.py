class BettingError(Exception):
    """Base class for errors raised by the betting toolkit."""


class DomainError(BettingError, ValueError):
    """An input lies outside the range where the e-value property holds."""


class DegenerateDistributionError(DomainError):
    """Expected log-growth is -inf for every bet in (0, 1)."""


class ConfigError(BettingError, ValueError):
    """An experiment configuration could not be parsed or validated."""


class InvariantViolation(BettingError, RuntimeError):
    """A pathwise guarantee failed during an audit or ordering check."""


class OutputError(BettingError, OSError):
    """Results could not be written to disk."""
