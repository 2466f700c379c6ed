"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A problem or run description is invalid.

    ``key`` is the dotted path of the offending entry when one is known.
    """

    def __init__(self, message, key=None):
        self.key = key
        if key:
            message = f"{key}: {message}"
        super().__init__(message)


class UnknownPresetError(ConfigError):
    pass


class ArityError(ConfigError):
    pass


class CFLViolation(ValueError):
    """An explicit step was requested with a time step that breaks monotonicity."""


class QuadratureError(ValueError):
    pass
