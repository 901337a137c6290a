"""Error and warning types shared by every module.

All errors derive from ValueError so pydantic validators can raise them
directly; each message starts with the class name so a CLI diagnostic
names the violated invariant.
"""


class MattingError(ValueError):
    """Base class for data errors (CLI exit status 1)."""

    def __init__(self, detail: str = ""):
        name = type(self).__name__
        super().__init__(f"{name}: {detail}" if detail else name)
        self.detail = detail


class OutOfRangeValue(MattingError):
    pass


class ShapeMismatch(MattingError):
    pass


class NonBinaryValue(MattingError):
    pass


class ZeroDimension(MattingError):
    pass


class EmptyMask(MattingError):
    pass


class EmptyBackground(MattingError):
    pass


class ImageTooSmall(MattingError):
    pass


class ChannelMismatch(MattingError):
    pass


class OddSplit(MattingError):
    pass


class MissingPrediction(MattingError):
    pass


class ManifestError(MattingError):
    pass


class ImageReadError(MattingError):
    pass


# --- Warnings ---

class EmptyUnknownWarning(UserWarning):
    """A loss was asked to average over an empty unknown region."""


class NoFullyOpaqueRegionWarning(UserWarning):
    """Connectivity error has no fully-opaque source region; reported as 0."""
