"""
Exception hierarchy for limit_dimension.

Every error raised on purpose by the library derives from LimitDimensionError,
so the CLI can tell configuration problems (exit 2) from numeric failures (exit 3).
"""
from typing import Optional


class LimitDimensionError(Exception):
    """Base class for all library errors"""


# Geometry

class DegenerateMap(LimitDimensionError, ValueError):
    """Coefficients with ad - bc == 0"""


class PoleHit(LimitDimensionError, ArithmeticError):
    """Point sits on the pole of a map"""


class NotAnIsometry(LimitDimensionError, ValueError):
    """Map is not (conjugate to) a real-trace isometry"""


class InvalidCircle(LimitDimensionError, ValueError):
    """Non-positive radius or a circle that degenerates to a line"""


# Groups

class SeparationViolated(LimitDimensionError):
    """Ping-pong check failed: circles overlap or a generator misses its target"""


class DepthOutOfRange(LimitDimensionError, ValueError):
    """Truncation depth outside the supported range"""


class InsufficientData(LimitDimensionError):
    """Too few shells / scales / points for a slope fit"""


# Iterated function systems

class InadmissibleWord(LimitDimensionError, ValueError):
    """Word violates the Markov transition rule"""


class PoleInDomain(LimitDimensionError):
    """A branch has its pole inside its source interval"""


class NotContracting(LimitDimensionError):
    """No iterate of the system is uniformly contracting"""


class InvalidTailLaw(LimitDimensionError, ValueError):
    """Tail envelope constants or exponents out of range"""


# Pressure

class TailDiverges(LimitDimensionError):
    """Partition sum is infinite (sigma at or below theta)"""


class NoConvergence(LimitDimensionError):
    """Power iteration did not stabilize"""


class NumericalFailure(LimitDimensionError, ArithmeticError):
    """Floating-point overflow or a non-finite value inside a numeric routine"""


class NotRegular(LimitDimensionError):
    """Bowen equation may have no root: the system is irregular"""


class BracketFailure(LimitDimensionError):
    """Pressure never changes sign on the search interval"""


# Deformations

class ValidityViolated(LimitDimensionError):
    """Family leaves the valid (contracting, separated) region"""

    def __init__(self, message: str, t: Optional[float] = None):
        super().__init__(message)
        self.t = t


class ParameterOutOfRange(LimitDimensionError, ValueError):
    """Parameter outside the family's interval"""


class ErrorFloorTooHigh(LimitDimensionError):
    """Curve values too noisy for a coefficient-decay test"""


class CurveEvaluationError(LimitDimensionError):
    """Solver failure at one node of a dimension curve"""

    def __init__(self, t: float, cause: Exception):
        super().__init__(f"dimension solve failed at t={t!r}: {cause}")
        self.t = t
        self.cause = cause


# Configuration

class ConfigError(LimitDimensionError, ValueError):
    """Malformed or inconsistent experiment configuration"""
