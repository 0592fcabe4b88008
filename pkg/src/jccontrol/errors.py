"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid input: bad parameters, malformed config, or a state that
    violates its structural invariants on entry."""


class ConfigError(ValidationError):
    """Config file failed to load or validate; carries the offending key path."""

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class NumericalInstabilityError(RuntimeError):
    """Propagation produced a state outside its invariant tolerances.

    ``time`` is the simulation time of the first failing sample.
    """

    def __init__(self, message, time=None):
        self.time = time
        super().__init__(message if time is None else f"{message} (at t={time:.6g})")
