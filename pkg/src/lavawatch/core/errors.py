from __future__ import annotations


class LavawatchError(Exception):
    pass


class MalformedImage(LavawatchError, ValueError):
    pass


class UnsupportedFormat(LavawatchError, ValueError):
    pass


class DimensionMismatch(LavawatchError, ValueError):
    pass


class EmptyBlob(LavawatchError, ValueError):
    pass


class ZeroDisplacement(LavawatchError, ValueError):
    pass


class IndeterminateTrajectory(LavawatchError, ValueError):
    pass


class NoFlows(LavawatchError, ValueError):
    pass


class FlowOutOfBounds(LavawatchError, ValueError):
    pass


class ConfigError(LavawatchError, ValueError):
    pass


class IoFailure(LavawatchError, OSError):
    pass


class BindFailure(LavawatchError, RuntimeError):
    pass
