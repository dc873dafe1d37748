"""Exception hierarchy shared by every stage of the transceiver."""

from typing import Iterable, List


class JrcError(Exception):
    pass


class ConfigError(JrcError, ValueError):
    """Raised when a configuration violates one or more invariants.

    Args:
        errors: one diagnostic per violated invariant

    """

    def __init__(self, errors: Iterable[str]):
        self.errors: List[str] = list(errors)
        super().__init__("Invalid configuration:\n  - " + "\n  - ".join(self.errors))


class FrameError(JrcError, ValueError):
    pass


class HeaderError(JrcError):
    pass


class SceneError(JrcError, ValueError):
    pass


class IqFormatError(JrcError, ValueError):
    pass


class FeedbackError(JrcError, OSError):
    pass
