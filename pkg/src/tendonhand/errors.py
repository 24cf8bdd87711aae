"""Exception hierarchy shared by every module in the package."""


class HandError(Exception):
    """Base class for all domain errors raised by tendonhand."""


class InvalidArgumentError(HandError, ValueError):
    pass


class ConfigurationError(HandError, ValueError):
    pass


class ReachabilityError(HandError):
    """The requested fingertip target cannot be reached.

    ``constraint`` names the violated condition, e.g. ``"reach"`` when the
    law-of-cosines term leaves [-1, 1] or ``"joint_limit:PIP"``.
    """

    def __init__(self, message, constraint):
        super().__init__(message)
        self.constraint = constraint


class SingularTargetError(HandError):
    pass


class PoseLookupError(HandError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class FrameError(HandError):
    """Base class for bus frame decoding failures."""


class FrameLengthError(FrameError):
    pass


class BadSyncError(FrameError):
    pass


class CrcError(FrameError):
    pass


class UnknownBoardError(FrameError):
    pass


class IncompleteFrameError(FrameError):
    """Fewer bytes than one frame are available; feed more data."""
