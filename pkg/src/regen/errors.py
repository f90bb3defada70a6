"""Exception types raised by the regen library.

Invalid arguments raise plain ``ValueError``; everything tied to file
contents or on-disk state derives from ``RegenError``.
"""


class RegenError(Exception):
    pass


class FileTooSmallError(RegenError, ValueError):
    """The archive has fewer bytes than parity blocks."""


class FormatError(RegenError):
    pass


class NotARegenFileError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


class GeometryMismatchError(FormatError):
    """The regen file does not describe the archive as it exists now."""


class SidecarError(RegenError):
    pass


class MissingSidecarError(SidecarError, FileNotFoundError):
    pass


class MalformedSidecarError(SidecarError, FormatError):
    pass


class MissingRegenFileError(RegenError, FileNotFoundError):
    pass


class PartialWriteError(RegenError, OSError):
    def __init__(self, message, applied):
        super().__init__(message)
        self.applied = applied


class PlacementError(RegenError):
    """Non-overlapping burst runs could not be placed."""
