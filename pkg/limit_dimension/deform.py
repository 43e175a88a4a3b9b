"""
Analytic one-parameter families of IFS and their dimension curves.

A family is a parameter interval plus a builder t -> IfsSystem whose
coefficients are polynomials in t. The dimension curve is sampled on
Chebyshev nodes, so geometric decay of its Chebyshev coefficients can serve
as a numerical test of real-analyticity.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy import fft, stats

from .errors import (
    CurveEvaluationError,
    ErrorFloorTooHigh,
    InsufficientData,
    LimitDimensionError,
    ParameterOutOfRange,
    ValidityViolated,
)
from .group import symmetric_schottky
from .ifs import IfsSystem, Interval, Letter, ifs_from_schottky, section5_tail_model
from .moebius import MoebiusMap
from .pressure import DEFAULT_SIZE, bowen_dimension
from .results import DimensionResult, PressureMethod

logger = logging.getLogger(__name__)

MAX_DEGREE = 8
VALIDITY_GRID = 65
MIN_CURVE_POINTS = 8
MIN_DIAGNOSTIC_POINTS = 16
MAX_CURVE_ERROR = 1e-8
DECAY_THRESHOLD = 0.95


class AnalyticityVerdict(str, Enum):
    CONSISTENT = "consistent-with-analytic"
    INCONCLUSIVE = "inconclusive"


def as_polynomial(coefficients) -> Polynomial:
    """Coefficients in increasing degree (a scalar is a constant)"""
    if isinstance(coefficients, Polynomial):
        poly = coefficients
    else:
        poly = Polynomial(np.atleast_1d(np.asarray(coefficients, dtype=float)))
    if poly.degree() > MAX_DEGREE:
        raise ValueError(f"polynomial degree {poly.degree()} exceeds {MAX_DEGREE}")
    return poly


@dataclass(frozen=True)
class DeformationFamily:
    """Parameter interval and builder t -> IfsSystem"""
    t_lo: float
    t_hi: float
    builder: Callable[[float], IfsSystem] = field(compare=False)
    name: str = ""
    description: Dict[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.t_lo < self.t_hi:
            raise ValueError(f"empty parameter interval [{self.t_lo}, {self.t_hi}]")


def family_eval(family: DeformationFamily, t: float) -> IfsSystem:
    """
    The system at parameter t.

    Raises:
        ParameterOutOfRange: t outside the family interval
        ValidityViolated: contraction, separation or tail bounds fail at t
    """
    span = family.t_hi - family.t_lo
    if not family.t_lo - 1e-12 * span <= t <= family.t_hi + 1e-12 * span:
        raise ParameterOutOfRange(f"t={t} outside [{family.t_lo}, {family.t_hi}]")
    try:
        return family.builder(float(t))
    except (LimitDimensionError, ValueError) as e:
        raise ValidityViolated(f"family {family.name or ''} invalid at t={t}: {e}", t=t) from e


def validate_family(family: DeformationFamily, points: int = VALIDITY_GRID) -> None:
    """Evaluate the family on a uniform grid; raises ValidityViolated at the first bad t"""
    for t in np.linspace(family.t_lo, family.t_hi, points):
        family_eval(family, float(t))


def polynomial_family(
    maps: Sequence[Sequence],
    t_range: Tuple[float, float],
    interval: Tuple[float, float] = (0.0, 1.0),
    name: str = "polynomial",
) -> DeformationFamily:
    """
    Single-interval family whose letters have coefficients (a, b, c, d), each a
    polynomial in t.
    """
    polys = [[as_polynomial(coef) for coef in letter] for letter in maps]
    if any(len(letter) != 4 for letter in polys):
        raise ValueError("each letter needs four coefficient polynomials (a, b, c, d)")
    base = Interval(*interval)

    def build(t: float) -> IfsSystem:
        letters = tuple(
            Letter(MoebiusMap(*(float(p(t)) for p in letter)), (0,), 0, label=f"branch{i}")
            for i, letter in enumerate(polys)
        )
        return IfsSystem((base,), letters, name=f"{name}(t={t!r})")

    return DeformationFamily(t_range[0], t_range[1], build, name, {"kind": "moebius", "letters": len(polys)})


def similarity_family(
    ratios: Sequence,
    offsets: Sequence,
    t_range: Tuple[float, float],
    name: str = "similarity",
) -> DeformationFamily:
    """Affine letters x -> r_i(t) x + o_i(t) on [0, 1]"""
    if len(ratios) != len(offsets):
        raise ValueError("ratios and offsets must have equal length")
    maps = [[as_polynomial(r), as_polynomial(o), 0.0, 1.0] for r, o in zip(ratios, offsets)]
    family = polynomial_family(maps, t_range, name=name)
    family.description.update({"kind": "similarity"})
    return family


def symmetric_similarity_family(ratio, t_range: Tuple[float, float]) -> DeformationFamily:
    """{r(t) x, r(t) x + 1 - r(t)}"""
    r = as_polynomial(ratio)
    return similarity_family([r, r], [0.0, 1.0 - r], t_range, name="symmetric-similarity")


def schottky_radius_family(rank: int, radius, t_range: Tuple[float, float]) -> DeformationFamily:
    """Symmetric Schottky group of fixed rank with circle radius r(t)"""
    r = as_polynomial(radius)

    def build(t: float) -> IfsSystem:
        return ifs_from_schottky(symmetric_schottky(rank, float(r(t))))

    return DeformationFamily(
        t_range[0], t_range[1], build, f"schottky-rank{rank}", {"kind": "schottky-radius", "rank": rank}
    )


def tail_exponent_family(
    upper_exponent,
    lower_exponent,
    t_range: Tuple[float, float],
    upper_constant: float = 0.05,
    lower_constant: float = 0.05,
) -> DeformationFamily:
    """Double-index tail model with Hölder-type exponents alpha(t), beta(t)"""
    alpha = as_polynomial(upper_exponent)
    beta = as_polynomial(lower_exponent)

    def build(t: float) -> IfsSystem:
        return section5_tail_model(
            upper_constant=upper_constant,
            upper_exponent=float(alpha(t)),
            lower_constant=lower_constant,
            lower_exponent=float(beta(t)),
        )

    return DeformationFamily(t_range[0], t_range[1], build, "tail-exponent", {"kind": "tail-exponent"})


def chebyshev_points(t_lo: float, t_hi: float, m: int) -> np.ndarray:
    """First-kind Chebyshev nodes, in the order matching chebyshev_coefficients"""
    j = np.arange(m)
    x = np.cos((2 * j + 1) * np.pi / (2 * m))
    return 0.5 * (t_lo + t_hi) + 0.5 * (t_hi - t_lo) * x


def chebyshev_coefficients(values: Sequence[float]) -> np.ndarray:
    """Coefficients c_k of the interpolant sum c_k T_k through first-kind node values"""
    values = np.asarray(values, dtype=float)
    coef = fft.dct(values, type=2) / values.size
    coef[0] /= 2.0
    return coef


@dataclass(frozen=True, eq=False)
class DimensionCurve:
    """dim(t) sampled on Chebyshev nodes with per-point errors"""
    t_lo: float
    t_hi: float
    grid: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    results: Tuple[DimensionResult, ...] = ()
    name: str = ""

    @property
    def m(self) -> int:
        return int(self.grid.size)

    def lipschitz_estimate(self) -> float:
        """max |dim(t_j+1) - dim(t_j)| / |t_j+1 - t_j| over adjacent nodes"""
        order = np.argsort(self.grid)
        t, v = self.grid[order], self.values[order]
        if t.size < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(v)) / np.diff(t)))

    def rows(self) -> List[Tuple[float, float, float]]:
        order = np.argsort(self.grid)
        return [(float(self.grid[i]), float(self.values[i]), float(self.errors[i])) for i in order]


def solve_node(family, t, method, size, tol) -> DimensionResult:
    try:
        return bowen_dimension(family_eval(family, t), method=method, size=size, tol=tol)
    except LimitDimensionError as e:
        raise CurveEvaluationError(t, e) from e


def dimension_curve(
    family: DeformationFamily,
    m: int,
    method: PressureMethod = PressureMethod.SPECTRAL,
    size: int = DEFAULT_SIZE,
    tol: float = 1e-10,
    threads: int = 1,
) -> DimensionCurve:
    """
    bowen_dimension at m Chebyshev nodes.

    Raises:
        InsufficientData: m < 8
        ValidityViolated: the family leaves the valid region somewhere on its interval
        CurveEvaluationError: solver failure, carrying the offending t
    """
    if m < MIN_CURVE_POINTS:
        raise InsufficientData(f"dimension curve needs at least {MIN_CURVE_POINTS} nodes, got {m}")
    validate_family(family)
    grid = chebyshev_points(family.t_lo, family.t_hi, m)

    def solve(t):
        return solve_node(family, float(t), method, size, tol)

    if threads <= 1:
        results = [solve(t) for t in grid]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve, grid))

    logger.info("dimension curve %s: %d nodes on [%g, %g]", family.name, m, family.t_lo, family.t_hi)
    return DimensionCurve(
        t_lo=family.t_lo,
        t_hi=family.t_hi,
        grid=grid,
        values=np.array([r.value for r in results]),
        errors=np.array([r.error for r in results]),
        results=tuple(results),
        name=family.name,
    )


@dataclass(frozen=True, eq=False)
class AnalyticityReport:
    coefficients: np.ndarray
    decay_rate: float
    error_floor: float
    fitted_indices: Tuple[int, ...]
    verdict: AnalyticityVerdict

    def to_dict(self) -> Dict[str, object]:
        return {
            "coefficients": [float(c) for c in self.coefficients],
            "decay_rate": self.decay_rate,
            "error_floor": self.error_floor,
            "fitted_indices": list(self.fitted_indices),
            "verdict": self.verdict.value,
        }


def analyticity_diagnostic(curve: DimensionCurve) -> AnalyticityReport:
    """
    Chebyshev coefficient decay test.

    The error floor is twice the largest point error (plus rounding relative to
    c_0). log|c_k| for k >= 1 above ten times the floor is fitted against k;
    exp(slope) is the decay rate. The verdict is consistent-with-analytic when
    the rate is below 0.95 and the last quarter of the coefficients sits at
    the floor; otherwise inconclusive. Non-analyticity is never claimed.

    Raises:
        InsufficientData: fewer than 16 points
        ErrorFloorTooHigh: point errors above 1e-8
    """
    if curve.m < MIN_DIAGNOSTIC_POINTS:
        raise InsufficientData(f"diagnostic needs at least {MIN_DIAGNOSTIC_POINTS} points, got {curve.m}")
    max_err = float(np.max(curve.errors)) if curve.errors.size else 0.0
    if max_err > MAX_CURVE_ERROR:
        raise ErrorFloorTooHigh(f"point errors up to {max_err:.3g} exceed {MAX_CURVE_ERROR:g}")

    coef = chebyshev_coefficients(curve.values)
    magnitude = np.abs(coef)
    floor = 2.0 * max_err + 1e-14 * max(1.0, float(magnitude[0]))
    cutoff = 10.0 * floor

    k = np.arange(coef.size)
    fitted = (k >= 1) & (magnitude > cutoff)
    if fitted.sum() >= 2:
        fit = stats.linregress(k[fitted], np.log(magnitude[fitted]))
        decay = float(math.exp(fit.slope))
    else:
        decay = 0.0

    tail_count = math.ceil(coef.size / 4)
    tail_quiet = bool(np.all(magnitude[-tail_count:] <= cutoff))
    verdict = (
        AnalyticityVerdict.CONSISTENT
        if decay < DECAY_THRESHOLD and tail_quiet
        else AnalyticityVerdict.INCONCLUSIVE
    )
    logger.info("analyticity diagnostic: rate=%.4g floor=%.3g verdict=%s", decay, floor, verdict.value)
    return AnalyticityReport(
        coefficients=coef,
        decay_rate=decay,
        error_floor=floor,
        fitted_indices=tuple(int(i) for i in k[fitted]),
        verdict=verdict,
    )


def curve_from_values(t_lo: float, t_hi: float, func: Callable[[np.ndarray], np.ndarray], m: int,
                      error: float = 0.0, name: str = "") -> DimensionCurve:
    """Curve of a given function on Chebyshev nodes (closed forms and synthetic test vectors)"""
    grid = chebyshev_points(t_lo, t_hi, m)
    values = np.asarray(func(grid), dtype=float)
    return DimensionCurve(t_lo, t_hi, grid, values, np.full(m, float(error)), name=name)
