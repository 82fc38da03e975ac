"""Exception hierarchy shared by the compiler stages."""


class ParityError(Exception):
    """Base class for all compiler errors."""


class ProblemError(ParityError):
    """Problem definition is malformed or internally inconsistent."""


class DeviceError(ParityError):
    """Device graph is malformed (unknown node, bad edge, disconnected)."""


class DisconnectedDeviceError(DeviceError):
    pass


class PlacementError(ParityError):
    """No placement satisfies the polynomial-constraint adjacency rules."""


class MoveRejected(ParityError):
    """A layout move would break locality of a polynomial constraint."""


class ResourceLimitError(ParityError):
    """Requested dense simulation exceeds the qubit cap."""


class FallbackSignal(ParityError):
    """A grid fast path cannot be realized on this device (obstacle hit)."""
