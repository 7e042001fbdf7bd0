"""Exception hierarchy shared by every ahsim module."""


class AhSimError(Exception):
    """Base class for all simulator errors."""


# aid codec
class OutOfRange(AhSimError, ValueError):
    pass


class ZeroAid(AhSimError, ValueError):
    pass


class CapacityExceeded(AhSimError, ValueError):
    pass


class MissingTim(AhSimError, ValueError):
    pass


class OffsetOverflow(AhSimError, ValueError):
    pass


# phy
class NonPositiveDistance(AhSimError, ValueError):
    pass


# mac
class Infeasible(AhSimError, ValueError):
    pass


class IllegalTransition(AhSimError, RuntimeError):
    """Raised on an event sequence the radio model forbids (a simulator bug)."""


class Conflict(AhSimError, ValueError):
    pass


class NoWindow(AhSimError, LookupError):
    pass


# energy / metrics
class NoTraffic(AhSimError, ValueError):
    pass


class NoDeliveries(AhSimError, ValueError):
    pass


class ZeroCapacity(AhSimError, ValueError):
    pass


# config
class ConfigInvalid(AhSimError, ValueError):
    pass


class UnknownScenario(AhSimError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown scenario"


class ParseError(AhSimError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")
