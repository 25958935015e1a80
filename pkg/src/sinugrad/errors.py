"""Exception types shared across the package."""


class SinugradError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(SinugradError, ValueError):
    """Invalid input: out-of-range, non-finite, or inconsistent parameters."""


class DegenerateParameterError(ValidationError):
    """A surrogate parameter is zero, so its frequency (complex angle) is undefined."""


class DivergenceError(SinugradError):
    """Optimization produced a non-finite gradient.

    Carries the optimizer step index at which the failure was detected.
    """

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite gradient at optimizer step {step}")


class ConditioningError(SinugradError):
    """A least-squares design matrix is rank deficient or near-singular.

    Carries the pair of column indices found to be most collinear.
    """

    def __init__(self, columns: tuple[int, int], message: str | None = None):
        self.columns = columns
        super().__init__(
            message
            or f"design matrix is near rank-deficient: columns {columns[0]} and "
            f"{columns[1]} are (almost) collinear"
        )


class UndefinedBoundError(SinugradError):
    """The requested estimator bound does not exist (zero noise)."""


class ConfigError(SinugradError):
    """Experiment configuration is malformed.

    Messages carry the offending key path (e.g. ``optimizer.learning_rate``)
    or, for unparseable files, the parser's line/column information.
    """


class SampleFileError(SinugradError):
    """A target sample file could not be parsed.

    Messages carry the file path and the line number (text files) or byte
    offset (binary files) of the failure.
    """
