class ClockSyncError(ValueError):
    """Base class for every error raised by the skew-estimation toolkit"""

    exit_code = 1


class ConfigurationError(ClockSyncError):
    """Invalid parameters, schedules or command-line flags"""

    exit_code = 2


class TimestampParseError(ClockSyncError):
    """A timestamp file could not be parsed"""

    exit_code = 3

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GapRangeError(ClockSyncError):
    """Gap outside [1, N-1], empty difference arrays or an empty sweep"""

    exit_code = 4

    def __init__(self, message, alpha=None, n_rounds=None):
        self.alpha = alpha
        self.n_rounds = n_rounds
        super().__init__(message)


class DomainError(ClockSyncError):
    """Optimal-gap formula evaluated outside its domain"""

    exit_code = 5

    def __init__(self, message, sigma=None):
        self.sigma = sigma
        super().__init__(message)


class DegenerateInputError(ClockSyncError):
    """Estimator denominator vanishes"""

    exit_code = 6
