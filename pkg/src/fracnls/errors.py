"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A model or numerical parameter lies outside its admissible range."""


class NonFiniteError(ValueError):
    """A field contains NaN or Inf samples."""


class PicardDivergenceError(RuntimeError):
    """The Duhamel fixed-point iteration stopped contracting."""


class ConfigError(ValueError):
    """An experiment configuration failed validation.

    ``field`` names the offending key (dotted path) when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)
