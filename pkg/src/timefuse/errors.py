"""Exception types raised across the toolkit."""


class TimefuseError(Exception):
    """Base class for all toolkit errors."""


class WindowTooShort(TimefuseError):
    """Input window has fewer time steps than the features require."""


class NonFiniteInput(TimefuseError):
    """Input contains NaN or infinite values."""


class LagTooLarge(TimefuseError):
    """Autocorrelation lag is not smaller than the series length."""


class ShapeMismatch(TimefuseError):
    """Arrays disagree on an expected dimension."""


class DuplicateModelName(TimefuseError):
    """Model roster contains a repeated identifier."""


class RosterMismatch(TimefuseError):
    """Two components disagree on the model roster (names or order)."""


class EmptyDataset(TimefuseError):
    """No samples available for the requested operation."""


class NonFiniteLoss(TimefuseError):
    """Training loss became NaN or infinite."""


class FormatError(TimefuseError):
    """File does not conform to the expected format (bad magic or version)."""


class TruncatedFile(TimefuseError):
    """File ends before the declared payload is complete."""


class ChecksumMismatch(TimefuseError):
    """Stored payload checksum does not match the recomputed one."""


class KOutOfRange(TimefuseError):
    """Requested selection size is outside [1, roster size]."""


class EmptySubset(TimefuseError):
    """Ensemble over an empty model subset."""


class UnknownTask(TimefuseError):
    """Referenced task id is not present in the given shards."""


class InsufficientTasks(TimefuseError):
    """Protocol requires more distinct tasks than were provided."""


class UnknownMethod(TimefuseError):
    """Report requested a method name that is not implemented."""


class InvalidPeriod(TimefuseError):
    """Seasonal-naive period is not usable for the given window."""


class InvalidWidth(TimefuseError):
    """Moving-average width is not usable for the given window."""


class InvalidOrder(TimefuseError):
    """Autoregressive order is not usable for the given window."""
