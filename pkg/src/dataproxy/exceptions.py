"""Error taxonomy.

Every error raised by this package derives from :class:`DataProxyError`.
The class name doubles as the machine-readable category emitted by the CLI.
"""


class DataProxyError(Exception):
    """Base class for all package errors."""

    @property
    def category(self) -> str:
        return type(self).__name__


class EmptyTestSet(DataProxyError):
    """No test samples to assign importance to."""


class ZeroTotalImportance(DataProxyError):
    """All importance values are zero; keep probabilities are undefined."""


class DegenerateInput(DataProxyError):
    """Input does not meet the minimum shape/size requirements."""


class DimMismatch(DataProxyError):
    """Vector or matrix dimensions disagree."""


class EmptyReferenceSet(DataProxyError):
    """Nearest-neighbor index built with zero reference points."""


class MissingImportance(DataProxyError):
    """A reference sample has no importance value to transfer."""


class InsufficientSupport(DataProxyError):
    """Fewer positive-probability samples than the requested proxy size."""


class ConfigMismatch(DataProxyError):
    """Accuracy tables do not describe the same configuration set."""


class ZeroVariance(DataProxyError):
    """A correlation input vector is constant."""


class MissingOutcome(DataProxyError):
    """A test sample has no recorded probe outcome."""


class NonFiniteLoss(DataProxyError):
    """Training produced a NaN or infinite loss."""


class FormatError(DataProxyError):
    """A file does not conform to its declared format or version."""
