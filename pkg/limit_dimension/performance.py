"""
Profiling and timing helpers for the pressure solvers.

Provides cProfile wrappers, a direct-vs-spectral timing comparison and a
collocation size picker.
"""
import cProfile
import io
import logging
import pstats
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

from .errors import LimitDimensionError
from .ifs import IfsSystem
from .pressure import DEFAULT_N_MAX, pressure_direct, transfer_eigenvalue

logger = logging.getLogger(__name__)

DEFAULT_SIZES = (4, 8, 16, 32, 64)


def profile_call(func: Callable, *args, **kwargs) -> Tuple[Any, pstats.Stats]:
    """
    Profile a function call and return results + stats.

    Args:
        func: Function to profile
        *args, **kwargs: Arguments to pass to function

    Returns:
        (function_result, pstats.Stats object)

    Example:
        result, stats = profile_call(bowen_dimension, system)
        stats.sort_stats('cumulative').print_stats(10)
    """
    profiler = cProfile.Profile()
    profiler.enable()
    try:
        result = func(*args, **kwargs)
    finally:
        profiler.disable()

    stream = io.StringIO()
    stats = pstats.Stats(profiler, stream=stream)
    return result, stats


def stats_report(stats: pstats.Stats, limit: int = 15) -> str:
    """Top entries by cumulative time as text"""
    stream = io.StringIO()
    stats.stream = stream
    stats.sort_stats("cumulative").print_stats(limit)
    return stream.getvalue()


@dataclass
class MethodTiming:
    method: str
    seconds: float
    value: float
    lower: float
    upper: float


def time_pressure_methods(
    system: IfsSystem,
    sigma: float,
    n_max: int = DEFAULT_N_MAX,
    size: int = 16,
) -> Dict[str, MethodTiming]:
    """
    Wall-clock time of one pressure evaluation per method.

    Returns:
        {"direct-subadditive": MethodTiming, "transfer-spectral": MethodTiming}
    """
    timings = {}
    for name, run in (
        ("direct-subadditive", lambda: pressure_direct(system, sigma, n_max)),
        ("transfer-spectral", lambda: transfer_eigenvalue(system, sigma, size)),
    ):
        start = time.perf_counter()
        estimate = run()
        elapsed = time.perf_counter() - start
        timings[name] = MethodTiming(name, elapsed, estimate.value, estimate.lower, estimate.upper)
        logger.debug("%s at sigma=%g: %.4fs", name, sigma, elapsed)
    return timings


def recommend_collocation_size(
    system: IfsSystem,
    sigma: float,
    sizes: Sequence[int] = DEFAULT_SIZES,
    tol: float = 1e-10,
) -> Optional[int]:
    """
    Smallest size whose leading eigenvalue agrees with the next size to tol.

    Returns None when no consecutive pair agrees.
    """
    previous_size, previous_value = None, None
    for size in sorted(sizes):
        try:
            value = transfer_eigenvalue(system, sigma, size).value
        except LimitDimensionError as e:
            logger.warning("collocation size %d failed: %s", size, e)
            previous_size, previous_value = None, None
            continue
        if previous_value is not None and abs(value - previous_value) <= tol:
            return previous_size
        previous_size, previous_value = size, value
    return None
