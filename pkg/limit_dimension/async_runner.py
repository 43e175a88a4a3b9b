"""
Async front end for dimension curves.
Use from asyncio applications to keep the event loop free while nodes are solved.
"""
import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import aiofiles
    HAS_AIOFILES = True
except ImportError:
    HAS_AIOFILES = False

from .deform import (
    DeformationFamily,
    DimensionCurve,
    MIN_CURVE_POINTS,
    solve_node,
    chebyshev_points,
    validate_family,
)
from .errors import InsufficientData
from .export import csv_text, write_text
from .pressure import DEFAULT_SIZE
from .results import PressureMethod

logger = logging.getLogger(__name__)

CURVE_HEADER = ("t", "dim", "err")


class AsyncCurveRunner:
    """
    Solves the nodes of a dimension curve in an executor.

    Usage:
        runner = AsyncCurveRunner(threads=4)
        curve = await runner.dimension_curve(family, 24)
        await runner.write_curve_csv(curve, "curve.csv")
    """

    def __init__(self, threads: int = 1, method: PressureMethod = PressureMethod.SPECTRAL,
                 size: int = DEFAULT_SIZE, tol: float = 1e-10):
        """
        Args:
            threads: worker threads for node solves
            method: pressure method passed to the Bowen solver
            size: collocation size for the spectral method
            tol: Bowen bisection tolerance
        """
        if threads < 1:
            raise ValueError("threads must be at least 1")
        self.threads = threads
        self.method = PressureMethod(method)
        self.size = size
        self.tol = tol
        self._executor: Optional[ThreadPoolExecutor] = None

    def _pool(self) -> ThreadPoolExecutor:
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=self.threads)
        return self._executor

    def close(self):
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    async def dimension_curve(self, family: DeformationFamily, m: int) -> DimensionCurve:
        """Same nodes and values as deform.dimension_curve"""
        if m < MIN_CURVE_POINTS:
            raise InsufficientData(f"dimension curve needs at least {MIN_CURVE_POINTS} nodes, got {m}")
        validate_family(family)
        grid = chebyshev_points(family.t_lo, family.t_hi, m)
        loop = asyncio.get_running_loop()
        pool = self._pool()
        tasks = [
            loop.run_in_executor(pool, solve_node, family, float(t), self.method, self.size, self.tol)
            for t in grid
        ]
        results = await asyncio.gather(*tasks)
        logger.info("async dimension curve %s: %d nodes", family.name, m)
        return DimensionCurve(
            t_lo=family.t_lo,
            t_hi=family.t_hi,
            grid=grid,
            values=np.array([r.value for r in results]),
            errors=np.array([r.error for r in results]),
            results=tuple(results),
            name=family.name,
        )

    async def write_curve_csv(self, curve: DimensionCurve, path: Path) -> Path:
        """Write (t, dim, err) rows; non-blocking through aiofiles when installed"""
        path = Path(path)
        text = csv_text(CURVE_HEADER, curve.rows())
        if HAS_AIOFILES:
            path.parent.mkdir(parents=True, exist_ok=True)
            async with aiofiles.open(path, "w", encoding="utf-8", newline="") as f:
                await f.write(text)
            return path
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(None, write_text, path, text)

    async def __aenter__(self) -> "AsyncCurveRunner":
        return self

    async def __aexit__(self, *exc):
        self.close()


async def async_dimension_curve(family: DeformationFamily, m: int, threads: int = 1, **options) -> DimensionCurve:
    """One-shot helper around AsyncCurveRunner"""
    async with AsyncCurveRunner(threads=threads, **options) as runner:
        return await runner.dimension_curve(family, m)
