"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: ConfigError -> 2, ValidityError -> 3,
AccuracyError -> 4.
"""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ValidityError(ValueError):
    """The requested state breaks a model-validity constraint (overlapping
    spheres, volume outside the allowed band, refined drag denominator
    changing sign)."""


class AccuracyError(RuntimeError):
    """Adaptive integration could not reach the requested tolerance.

    Carries the best value and error estimate achieved.
    """

    def __init__(self, message, value_estimate, error_estimate):
        super().__init__(message)
        self.value_estimate = value_estimate
        self.error_estimate = error_estimate


class ConfigError(ValueError):
    """A declarative experiment config failed validation.

    `path` names the offending field, e.g. "stroke.v_s".
    """

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
