"""Exception hierarchy shared across the simulator."""


class EdgeflowError(Exception):
    """Base class for all edgeflow errors."""


class InvalidInput(EdgeflowError, ValueError):
    """Input violates an operation's precondition (non-finite, empty, ...)."""


class DimensionMismatch(InvalidInput):
    """Operands have incompatible shapes."""


class NumericalFailure(EdgeflowError):
    """An underlying numerical routine failed to converge."""


class IllConditionedChannel(EdgeflowError):
    """A channel singular value is below the inversion threshold."""

    def __init__(self, device_id, sigma_min, threshold):
        self.device_id = device_id
        self.sigma_min = sigma_min
        self.threshold = threshold
        super().__init__(
            f"device {device_id}: singular value {sigma_min:.3e} below "
            f"threshold {threshold:.3e}"
        )


class AlignmentSingular(EdgeflowError):
    """Per-device alignment matrix is too ill-conditioned to invert."""


class FormatError(EdgeflowError):
    """A serialized stream is malformed (bad magic, version, truncation)."""


class ConfigError(EdgeflowError):
    """Experiment configuration is missing, malformed, or inconsistent."""


class ModelDegenerate(EdgeflowError):
    """Model state admits no meaningful answer (e.g. zero weight vector)."""
