import asyncio
import csv

import numpy as np
import pytest

from limit_dimension.async_runner import AsyncCurveRunner, async_dimension_curve
from limit_dimension.deform import dimension_curve, symmetric_similarity_family
from limit_dimension.errors import InsufficientData


@pytest.fixture(scope="module")
def family():
    return symmetric_similarity_family([1 / 3, 0.1], (-0.5, 0.5))


def test_async_curve_matches_sync(family):
    expected = dimension_curve(family, 8)
    curve = asyncio.run(async_dimension_curve(family, 8, threads=2))
    np.testing.assert_array_equal(curve.grid, expected.grid)
    np.testing.assert_array_equal(curve.values, expected.values)
    assert len(curve.results) == 8


def test_write_curve_csv(family, tmp_path):
    async def go():
        async with AsyncCurveRunner(threads=2) as runner:
            curve = await runner.dimension_curve(family, 8)
            path = await runner.write_curve_csv(curve, tmp_path / "nested" / "curve.csv")
        return curve, path

    curve, path = asyncio.run(go())
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["t", "dim", "err"]
    assert [float(r[0]) for r in rows[1:]] == [t for t, _, _ in curve.rows()]


def test_runner_argument_checks(family):
    with pytest.raises(ValueError):
        AsyncCurveRunner(threads=0)
    with pytest.raises(InsufficientData):
        asyncio.run(async_dimension_curve(family, 7))


def test_close_is_idempotent():
    runner = AsyncCurveRunner()
    runner.close()
    runner.close()
