"""
Result records shared by the pressure, group and deform modules.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple


class PressureMethod(str, Enum):
    DIRECT = "direct-subadditive"
    SPECTRAL = "transfer-spectral"


@dataclass(frozen=True)
class PressureEstimate:
    """P(sigma) with the bracket the method can certify"""
    sigma: float
    value: float
    method: PressureMethod
    resolution: int
    lower: float
    upper: float
    distortion: Optional[float] = None
    iterations: Optional[int] = None

    @property
    def bracket(self) -> Tuple[float, float]:
        return self.lower, self.upper

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sigma": self.sigma,
            "value": self.value,
            "method": self.method.value,
            "resolution": self.resolution,
            "lower": self.lower,
            "upper": self.upper,
            "distortion": self.distortion,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class DimensionResult:
    """
    Dimension estimate with bracket and provenance.

    error is never smaller than half the bracket width.
    """
    value: float
    lower: float
    upper: float
    method: str
    error: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        half_width = 0.5 * (self.upper - self.lower)
        if self.error < half_width:
            object.__setattr__(self, "error", half_width)

    @property
    def bracket(self) -> Tuple[float, float]:
        return self.lower, self.upper

    def to_dict(self) -> Dict[str, Any]:
        record = {
            "value": self.value,
            "lower": self.lower,
            "upper": self.upper,
            "method": self.method,
            "error": self.error,
        }
        if self.details:
            record["details"] = dict(self.details)
        return record
