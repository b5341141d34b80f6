"""Exception and warning types shared across the package."""


class InvalidArgumentError(ValueError):
    pass


class InvalidDimensionError(InvalidArgumentError):
    pass


class UnsupportedInputError(InvalidArgumentError):
    pass


class TruncationError(ValueError):
    """Raised when a truncated state loses too much probability mass."""

    def __init__(self, message, leaked):
        super().__init__(f"{message} (leaked mass {leaked:.3e})")
        self.leaked = leaked


class IntegrationError(RuntimeError):
    """Integration failed; ``time`` is where it happened."""

    def __init__(self, message, time):
        super().__init__(f"{message} at t={time:.6g}")
        self.time = time


class InstabilityError(IntegrationError):
    pass


class FitError(RuntimeError):
    def __init__(self, message, params=None):
        super().__init__(message)
        self.params = params


class NotConvergedError(ValueError):
    def __init__(self, message, variation):
        super().__init__(f"{message} (relative variation {variation:.3e})")
        self.variation = variation


class TruncationWarning(UserWarning):
    pass


class ConfigError(InvalidArgumentError):
    pass
