"""Exception hierarchy shared by all modules."""


class GearScaleError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(GearScaleError, ValueError):
    pass


class MonotoneSignalError(GearScaleError):
    """Too few extrema to build upper and lower envelopes."""


class DegenerateInputError(GearScaleError, ValueError):
    pass


class UndefinedCosineError(GearScaleError, ZeroDivisionError):
    """Normalized dot product requested for a zero-norm vector."""


class DataFormatError(GearScaleError):
    """A signal or feature file could not be parsed."""


class ChannelError(GearScaleError, IndexError):
    pass


class ConvergenceError(GearScaleError):
    """SVM solver hit its iteration cap before meeting the KKT tolerance."""

    def __init__(self, message, kkt_violation):
        super().__init__(f"{message} (final KKT violation {kkt_violation:.3e})")
        self.kkt_violation = kkt_violation
        self._message = message

    def __reduce__(self):
        return type(self), (self._message, self.kkt_violation)


class PipelineStageError(GearScaleError):
    """Wraps a failure with the pipeline stage it occurred in."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause

    def __reduce__(self):
        return type(self), (self.stage, self.cause)
