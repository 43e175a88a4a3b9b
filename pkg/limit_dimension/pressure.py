"""
Topological pressure and the Bowen equation.

Two independent estimators:
    - direct: spectral radii of the state matrices of sup / inf word norms,
      which bracket P(sigma) from above and below at every word length;
    - spectral: leading eigenvalue of the transfer operator discretized by
      Chebyshev collocation on each base interval.

The dimension is the zero of sigma -> P(sigma), found by bisection.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    BracketFailure,
    DepthOutOfRange,
    NoConvergence,
    NotRegular,
    TailDiverges,
)
from .ifs import Interval, IfsSystem, WordNormTable, theta_number
from .results import DimensionResult, PressureEstimate, PressureMethod

logger = logging.getLogger(__name__)

POWER_TOL = 1e-13
POWER_MAX_ITER = 10_000
BISECTION_TOL = 1e-10
BRACKET_START = 0.01
SIGMA_CEILING = 2.0
ZERO_ENTROPY_TOL = 1e-10
DEFAULT_SIZE = 16
DEFAULT_N_MAX = 8


class Regularity(str, Enum):
    REGULAR = "regular"
    IRREGULAR = "irregular"
    FINITE = "finite-alphabet"


def regularity_check(system: IfsSystem) -> Regularity:
    """Finite alphabets are trivially regular; tails by the series test at theta"""
    if system.tail is None:
        return Regularity.FINITE
    return Regularity.REGULAR if system.tail.is_regular else Regularity.IRREGULAR


def _spectral_radius(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


def pressure_direct(
    system: IfsSystem,
    sigma: float,
    n_max: int = DEFAULT_N_MAX,
    table: Optional[WordNormTable] = None,
) -> PressureEstimate:
    """
    Bracket P(sigma) by the state matrices Psi_n (sup norms) and Psi-_n
    (inf norms) over base intervals:

        (1/n) log rho(Psi-_n) <= P(sigma) <= (1/n) log rho(Psi_n)

    The best bounds over n = 1..n_max are reported; the value is the bracket
    midpoint and the distortion is the sup/inf ratio at length n_max.

    Raises:
        DepthOutOfRange: n_max < 2
        TailDiverges: sigma at or below theta
    """
    if n_max < 2:
        raise DepthOutOfRange(f"n_max must be at least 2, got {n_max}")
    if sigma <= theta_number(system):
        raise TailDiverges(f"partition sum diverges at sigma={sigma} (theta={theta_number(system)})")
    if table is None or table.n_max < n_max:
        table = WordNormTable(system, n_max)

    upper, lower = math.inf, -math.inf
    for n in range(1, n_max + 1):
        psi_up = table.state_matrix(sigma, n, "upper")
        psi_lo = table.state_matrix(sigma, n, "lower")
        if psi_up is None or psi_lo is None:
            raise TailDiverges(f"tail sum diverges at sigma={sigma}")
        upper = min(upper, math.log(_spectral_radius(psi_up)) / n)
        lower = max(lower, math.log(_spectral_radius(psi_lo)) / n)
    lower = min(lower, upper)

    distortion = table.distortion(n_max)
    logger.debug("direct pressure sigma=%.6g: [%.12g, %.12g] distortion=%.4g", sigma, lower, upper, distortion)
    return PressureEstimate(
        sigma=sigma,
        value=0.5 * (lower + upper),
        method=PressureMethod.DIRECT,
        resolution=n_max,
        lower=lower,
        upper=upper,
        distortion=distortion,
    )


def chebyshev_nodes(interval: Interval, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """First-kind Chebyshev nodes on the interval and their barycentric weights"""
    k = np.arange(size)
    angles = (2 * k + 1) * np.pi / (2 * size)
    nodes = interval.midpoint + 0.5 * interval.length * np.cos(angles)
    weights = (-1.0) ** k * np.sin(angles)
    return nodes, weights


def barycentric_matrix(nodes: np.ndarray, weights: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Rows evaluate the interpolant through the nodes at each point"""
    points = np.atleast_1d(np.asarray(points, dtype=float))
    diff = points[:, None] - nodes[None, :]
    exact = np.abs(diff) < 1e-15 * max(1.0, float(np.max(np.abs(nodes))))
    diff = np.where(exact, 1.0, diff)
    terms = weights[None, :] / diff
    rows = terms / terms.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    if hit.any():
        rows[hit] = exact[hit].astype(float)
    return rows


def transfer_matrix(system: IfsSystem, sigma: float, size: int = DEFAULT_SIZE, bound: str = "upper") -> np.ndarray:
    """
    Collocation matrix of (L h)(x) = sum_i |phi_i'(x)|^sigma h(phi_i(x)).

    The tail enters as a rank-one term: its envelope sum times h at the tail
    anchor, on every tail source interval.
    """
    count = len(system.intervals)
    grids = [chebyshev_nodes(iv, size) for iv in system.intervals]
    matrix = np.zeros((count * size, count * size))

    for letter in system.letters:
        f = letter.map
        t_nodes, t_weights = grids[letter.target]
        for j in letter.sources:
            x = grids[j][0]
            w = x.astype(complex)
            y = ((f.a * w + f.b) / (f.c * w + f.d)).real
            weight = np.exp(-sigma * np.log(np.abs(f.c * w + f.d) ** 2))
            block = weight[:, None] * barycentric_matrix(t_nodes, t_weights, y)
            matrix[j * size:(j + 1) * size, letter.target * size:(letter.target + 1) * size] += block

    if system.tail is not None:
        tail = system.tail
        total = tail.tail_sum(sigma, bound)
        if not math.isfinite(total):
            raise TailDiverges(f"tail sum diverges at sigma={sigma}")
        t_nodes, t_weights = grids[tail.target]
        row = total * barycentric_matrix(t_nodes, t_weights, [tail.anchor])[0]
        for j in tail.sources:
            matrix[j * size:(j + 1) * size, tail.target * size:(tail.target + 1) * size] += row[None, :]
    return matrix


def leading_eigenvalue(matrix: np.ndarray, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> Tuple[float, int]:
    """
    Power iteration from the constant vector.

    Raises:
        NoConvergence: no stabilization within max_iter steps
    """
    v = np.ones(matrix.shape[0])
    lam = 0.0
    for iteration in range(1, max_iter + 1):
        w = matrix @ v
        new_lam = float(np.max(np.abs(w)))
        if new_lam == 0.0:
            return 0.0, iteration
        w = w / new_lam
        if abs(new_lam - lam) <= tol * new_lam and np.max(np.abs(w - v)) <= 100 * tol:
            return new_lam, iteration
        v, lam = w, new_lam
    raise NoConvergence(f"power iteration did not settle within {max_iter} steps")


def transfer_eigenvalue(system: IfsSystem, sigma: float, size: int = DEFAULT_SIZE) -> PressureEstimate:
    """
    log of the leading eigenvalue of the discretized transfer operator.

    Countable systems get two operators (upper and lower tail envelope) whose
    eigenvalues bracket the pressure.

    Raises:
        TailDiverges: sigma at or below theta
        NoConvergence: power iteration failed
    """
    if size < 4:
        raise ValueError(f"collocation size must be at least 4, got {size}")
    if sigma <= theta_number(system):
        raise TailDiverges(f"transfer operator undefined at sigma={sigma} (theta={theta_number(system)})")

    lam_up, iters = leading_eigenvalue(transfer_matrix(system, sigma, size, "upper"))
    if system.tail is None:
        lam_lo = lam_up
    else:
        lam_lo, more = leading_eigenvalue(transfer_matrix(system, sigma, size, "lower"))
        iters += more
    upper = math.log(lam_up) if lam_up > 0 else -math.inf
    lower = math.log(lam_lo) if lam_lo > 0 else -math.inf
    lower = min(lower, upper)
    return PressureEstimate(
        sigma=sigma,
        value=0.5 * (lower + upper),
        method=PressureMethod.SPECTRAL,
        resolution=size,
        lower=lower,
        upper=upper,
        iterations=iters,
    )


def pressure(
    system: IfsSystem,
    sigma: float,
    method: PressureMethod = PressureMethod.SPECTRAL,
    size: int = DEFAULT_SIZE,
    n_max: int = DEFAULT_N_MAX,
) -> PressureEstimate:
    if PressureMethod(method) is PressureMethod.DIRECT:
        return pressure_direct(system, sigma, n_max)
    return transfer_eigenvalue(system, sigma, size)


def pressure_curve(
    system: IfsSystem,
    sigmas: Sequence[float],
    method: PressureMethod = PressureMethod.SPECTRAL,
    size: int = DEFAULT_SIZE,
    n_max: int = DEFAULT_N_MAX,
    threads: int = 1,
) -> List[PressureEstimate]:
    """P on a sigma grid; evaluations are independent and run on a thread pool"""
    method = PressureMethod(method)
    if method is PressureMethod.DIRECT:
        table = WordNormTable(system, n_max)

        def evaluate(s):
            return pressure_direct(system, s, n_max, table)
    else:
        def evaluate(s):
            return transfer_eigenvalue(system, s, size)

    if threads <= 1:
        return [evaluate(s) for s in sigmas]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(evaluate, sigmas))


def _find_root(
    p: Callable[[float], float],
    start: float,
    floor: float,
    tol: float,
) -> Tuple[float, float]:
    """
    Bracket and bisect the zero of a decreasing function.

    start is the first probe; floor is theta (or 0) where p is known positive
    or infinite. Returns the final bracket (lo, hi).
    """
    lo, hi = start, None
    if p(lo) <= 0:
        hi = lo
        for k in range(1, 40):
            candidate = floor + (start - floor) / 2.0 ** k
            if p(candidate) > 0:
                lo = candidate
                break
            hi = candidate
        else:
            raise BracketFailure(f"pressure is not positive anywhere above {floor}")
    else:
        step = BRACKET_START
        while hi is None:
            candidate = min(lo + step, SIGMA_CEILING)
            if p(candidate) <= 0:
                hi = candidate
            elif candidate >= SIGMA_CEILING:
                raise BracketFailure(f"pressure stays positive up to sigma={SIGMA_CEILING}")
            else:
                lo = candidate
                step *= 2.0
                logger.debug("bracket doubling: lo=%.6g step=%.4g", lo, step)

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if p(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def bowen_dimension(
    system: IfsSystem,
    method: PressureMethod = PressureMethod.SPECTRAL,
    size: int = DEFAULT_SIZE,
    n_max: int = DEFAULT_N_MAX,
    tol: float = BISECTION_TOL,
) -> DimensionResult:
    """
    Zero of sigma -> P(sigma).

    Finite systems with the spectral method give one root to width tol.
    Countable systems (or the direct method) give two roots, of the upper
    and the lower pressure bound, which bracket the dimension.

    Raises:
        NotRegular: the tail series converges at theta
        BracketFailure: P does not change sign on (theta, 2]
    """
    method = PressureMethod(method)
    regularity = regularity_check(system)
    if regularity is Regularity.IRREGULAR:
        raise NotRegular(f"{system.name or 'system'} is irregular; the Bowen equation may have no root")

    theta = theta_number(system)
    floor = 0.0 if system.tail is None else theta
    start = BRACKET_START if system.tail is None else theta + BRACKET_START

    if method is PressureMethod.DIRECT:
        table = WordNormTable(system, n_max)

        def upper_p(s):
            return pressure_direct(system, s, n_max, table).upper

        def lower_p(s):
            return pressure_direct(system, s, n_max, table).lower

        provenance = f"bowen/{method.value}(n_max={n_max})"
    else:
        def upper_p(s):
            return transfer_eigenvalue(system, s, size).upper

        def lower_p(s):
            return transfer_eigenvalue(system, s, size).lower

        provenance = f"bowen/{method.value}(size={size})"

    details = {"regularity": regularity.value, "theta": theta, "tolerance": tol}

    if system.tail is None and upper_p(0.0) <= ZERO_ENTROPY_TOL:
        logger.info("zero-entropy system %s: dimension 0", system.name or "")
        return DimensionResult(0.0, 0.0, 0.0, provenance, error=0.0, details=details)

    hi_lo, hi_hi = _find_root(upper_p, start, floor, tol)
    if system.tail is None and method is PressureMethod.SPECTRAL:
        lo_lo, lo_hi = hi_lo, hi_hi
    else:
        if system.tail is None and lower_p(0.0) <= ZERO_ENTROPY_TOL:
            lo_lo, lo_hi = 0.0, 0.0
        else:
            lo_lo, lo_hi = _find_root(lower_p, start, floor, tol)

    lower, upper = min(lo_lo, hi_lo), max(lo_hi, hi_hi)
    value = 0.5 * (lower + upper)
    logger.info("dimension of %s: %.12f [%.12f, %.12f]", system.name or "system", value, lower, upper)
    return DimensionResult(value, lower, upper, provenance, error=0.5 * (upper - lower), details=details)
