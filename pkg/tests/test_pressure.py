import math

import numpy as np
import pytest

from limit_dimension.errors import DepthOutOfRange, NoConvergence, NotRegular, TailDiverges
from limit_dimension.group import schottky_group, symmetric_schottky, two_circle_schottky
from limit_dimension.ifs import (
    Interval,
    WordNormTable,
    continued_fraction_system,
    gauss_parabolic_model,
    ifs_from_schottky,
    section5_tail_model,
    similarity_system,
)
from limit_dimension.moebius import MoebiusMap, conjugate
from limit_dimension.pressure import (
    Regularity,
    barycentric_matrix,
    bowen_dimension,
    chebyshev_nodes,
    leading_eigenvalue,
    pressure,
    pressure_curve,
    pressure_direct,
    regularity_check,
    transfer_eigenvalue,
)
from limit_dimension.results import DimensionResult, PressureMethod

# dim of the continued fractions with digits 1 and 2
CF12_DIMENSION = 0.5312805062772051


@pytest.fixture(scope="module")
def middle_thirds():
    return similarity_system([1 / 3, 1 / 3], [0.0, 2 / 3])


@pytest.fixture(scope="module")
def cf12():
    return continued_fraction_system([1, 2])


def test_pressure_direct_at_zero_is_log_of_alphabet(cf12):
    estimate = pressure_direct(cf12, 0.0, n_max=4)
    assert estimate.lower == pytest.approx(math.log(2), abs=1e-12)
    assert estimate.upper == pytest.approx(math.log(2), abs=1e-12)


def test_pressure_direct_similarity_is_exact(middle_thirds):
    estimate = pressure_direct(middle_thirds, 0.5, n_max=4)
    expected = math.log(2) - 0.5 * math.log(3)
    assert estimate.lower == pytest.approx(expected, abs=1e-12)
    assert estimate.upper == pytest.approx(expected, abs=1e-12)
    assert estimate.distortion == pytest.approx(1.0)
    assert estimate.method is PressureMethod.DIRECT


def test_direct_bracket_contains_spectral_value(cf12):
    for sigma in (0.3, 0.53, 0.8):
        direct = pressure_direct(cf12, sigma, n_max=8)
        spectral = transfer_eigenvalue(cf12, sigma, size=24)
        assert direct.lower - 1e-8 <= spectral.value <= direct.upper + 1e-8
        assert direct.lower <= direct.upper


def test_direct_bracket_narrows_with_length(cf12):
    short = pressure_direct(cf12, 0.5, n_max=3)
    long = pressure_direct(cf12, 0.5, n_max=8)
    assert long.upper - long.lower <= short.upper - short.lower


def test_pressure_direct_argument_checks(cf12):
    with pytest.raises(DepthOutOfRange):
        pressure_direct(cf12, 0.5, n_max=1)
    with pytest.raises(TailDiverges):
        pressure_direct(gauss_parabolic_model(), 0.5)


def test_transfer_eigenvalue_similarity(middle_thirds):
    for sigma in (0.0, 0.4, 1.0):
        estimate = transfer_eigenvalue(middle_thirds, sigma)
        assert estimate.value == pytest.approx(math.log(2) - sigma * math.log(3), abs=1e-12)
        assert estimate.resolution == 16


def test_transfer_eigenvalue_argument_checks(cf12):
    with pytest.raises(ValueError):
        transfer_eigenvalue(cf12, 0.5, size=3)
    gauss = gauss_parabolic_model()
    with pytest.raises(TailDiverges):
        transfer_eigenvalue(gauss, 0.5)
    with pytest.raises(TailDiverges):
        transfer_eigenvalue(gauss, 0.2)


def test_transfer_eigenvalue_countable_brackets(cf12):
    gauss = gauss_parabolic_model()
    estimate = transfer_eigenvalue(gauss, 1.2)
    assert estimate.lower < estimate.upper
    assert estimate.lower <= estimate.value <= estimate.upper


def test_pressure_strictly_decreasing(cf12):
    curve = pressure_curve(cf12, np.linspace(0.1, 1.5, 8))
    values = [p.value for p in curve]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_pressure_curve_threads_agree(cf12):
    sigmas = [0.2, 0.5, 0.9, 1.3]
    serial = pressure_curve(cf12, sigmas, threads=1)
    pooled = pressure_curve(cf12, sigmas, threads=2)
    assert [p.value for p in serial] == [p.value for p in pooled]
    direct = pressure_curve(cf12, sigmas, method="direct-subadditive", n_max=4)
    assert all(p.method is PressureMethod.DIRECT for p in direct)


def test_pressure_dispatch(cf12):
    assert pressure(cf12, 0.5, PressureMethod.DIRECT, n_max=3).method is PressureMethod.DIRECT
    assert pressure(cf12, 0.5).method is PressureMethod.SPECTRAL


def test_chebyshev_interpolation_exact_for_polynomials():
    nodes, weights = chebyshev_nodes(Interval(-1.0, 3.0), 8)
    points = np.array([-0.7, 0.0, 1.3, 2.9])
    values = nodes ** 5 - 2 * nodes ** 2 + 1
    rows = barycentric_matrix(nodes, weights, points)
    np.testing.assert_allclose(rows @ values, points ** 5 - 2 * points ** 2 + 1, rtol=1e-10)
    hit = barycentric_matrix(nodes, weights, [nodes[3]])
    np.testing.assert_array_equal(hit[0], np.eye(8)[3])


def test_leading_eigenvalue():
    value, iterations = leading_eigenvalue(np.array([[3.0, 0.0], [0.0, 1.0]]))
    assert value == pytest.approx(3.0)
    assert iterations >= 1
    with pytest.raises(NoConvergence):
        leading_eigenvalue(np.array([[0.0, 1.0], [-1.0, 0.0]]), max_iter=50)


def test_bowen_middle_thirds(middle_thirds):
    result = bowen_dimension(middle_thirds, tol=1e-12)
    assert result.value == pytest.approx(math.log(2) / math.log(3), abs=1e-9)
    assert result.method == "bowen/transfer-spectral(size=16)"
    assert result.details["regularity"] == "finite-alphabet"
    direct = bowen_dimension(middle_thirds, method=PressureMethod.DIRECT, n_max=3, tol=1e-12)
    assert direct.value == pytest.approx(math.log(2) / math.log(3), abs=1e-9)
    assert direct.method == "bowen/direct-subadditive(n_max=3)"


def test_bowen_continued_fraction(cf12):
    result = bowen_dimension(cf12, size=24)
    assert result.value == pytest.approx(CF12_DIMENSION, abs=1e-7)


def test_bowen_direct_bracket_contains_dimension(cf12):
    result = bowen_dimension(cf12, method=PressureMethod.DIRECT, n_max=8)
    assert result.lower <= CF12_DIMENSION <= result.upper
    assert result.error >= 0.5 * (result.upper - result.lower)


def test_bowen_gauss_bracket_contains_one():
    result = bowen_dimension(gauss_parabolic_model())
    assert result.lower <= 1.0 <= result.upper
    assert result.details["regularity"] == "regular"
    assert result.details["theta"] == pytest.approx(0.5)


def test_bowen_zero_entropy_system():
    system = ifs_from_schottky(two_circle_schottky(0.1))
    result = bowen_dimension(system)
    assert result.value == 0.0
    assert result.bracket == (0.0, 0.0)


def test_bowen_rejects_irregular_tail():
    system = section5_tail_model(log_power=4.0)
    assert regularity_check(system) is Regularity.IRREGULAR
    with pytest.raises(NotRegular):
        bowen_dimension(system)


def test_regularity_labels(cf12):
    assert regularity_check(cf12) is Regularity.FINITE
    assert regularity_check(gauss_parabolic_model()) is Regularity.REGULAR
    assert regularity_check(section5_tail_model(log_power=2.0)) is Regularity.REGULAR


def test_section5_tail_pressure_root_above_theta():
    system = section5_tail_model()
    result = bowen_dimension(system)
    assert result.lower > 0.5
    assert result.upper < 1.0


def test_dimension_result_error_covers_bracket():
    result = DimensionResult(0.5, 0.4, 0.7, "test", error=0.01)
    assert result.error == pytest.approx(0.15)
    assert result.to_dict()["error"] == pytest.approx(0.15)


def test_bowen_dimension_ignores_letter_order():
    forward = similarity_system([0.2, 0.3, 0.4], [0.0, 0.25, 0.6])
    shuffled = similarity_system([0.4, 0.2, 0.3], [0.6, 0.0, 0.25])
    expected = bowen_dimension(forward, tol=1e-12).value
    assert bowen_dimension(shuffled, tol=1e-12).value == pytest.approx(expected, abs=1e-10)
    swapped = continued_fraction_system([2, 1])
    assert bowen_dimension(swapped, size=24).value == pytest.approx(CF12_DIMENSION, abs=1e-7)


def test_bowen_dimension_invariant_under_conjugating_the_group():
    group = symmetric_schottky(2, 0.3)
    a = 0.2 + 0.1j
    h = MoebiusMap(1, -a, -a.conjugate(), 1)
    moved = schottky_group(
        [conjugate(g, h) for g in group.generators[:2]],
        [c.image(h) for c in group.circles],
        group.pairing[:2],
    )
    original = bowen_dimension(ifs_from_schottky(group), size=32).value
    assert bowen_dimension(ifs_from_schottky(moved), size=32).value == pytest.approx(original, abs=1e-6)


def test_adding_a_letter_increases_dimension(cf12):
    cf123 = continued_fraction_system([1, 2, 3])
    assert bowen_dimension(cf123).value > bowen_dimension(cf12).value + 1e-3
    pair = similarity_system([0.2, 0.2], [0.0, 0.8])
    triple = similarity_system([0.2, 0.2, 0.2], [0.0, 0.4, 0.8])
    assert bowen_dimension(triple).value > bowen_dimension(pair).value + 1e-3


def test_direct_bracket_tightens_monotonically_on_schottky():
    system = ifs_from_schottky(symmetric_schottky(2, 0.3))
    table = WordNormTable(system, 6)
    estimates = [pressure_direct(system, 0.4, n_max=n, table=table) for n in range(2, 7)]
    uppers = [e.upper for e in estimates]
    lowers = [e.lower for e in estimates]
    assert all(b <= a for a, b in zip(uppers, uppers[1:]))
    assert all(b >= a for a, b in zip(lowers, lowers[1:]))
    spectral = transfer_eigenvalue(system, 0.4).value
    assert lowers[-1] - 1e-8 <= spectral <= uppers[-1] + 1e-8


def test_log_weighted_tail_has_a_root_above_theta():
    result = bowen_dimension(section5_tail_model(log_power=2.0))
    assert 0.5 < result.lower <= result.upper < 1.0
