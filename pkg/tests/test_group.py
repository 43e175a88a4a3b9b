import math

import numpy as np
import pytest

from limit_dimension.errors import DepthOutOfRange, InsufficientData, NotAnIsometry, SeparationViolated
from limit_dimension.group import (
    ConvergenceVerdict,
    GroupKind,
    GroupPresentation,
    Section5Convention,
    build_section5_group,
    convergence_type_probe,
    counting_function,
    critical_exponent_estimate,
    cyclic_hyperbolic,
    enumerate_orbit,
    poincare_partial_sum,
    schottky_group,
    section5_half_plane_disks,
    shell_sums,
    symmetric_reflection_group,
    symmetric_schottky,
    two_circle_schottky,
)
from limit_dimension.moebius import (
    POINT_AT_INFINITY,
    Circle,
    MoebiusKind,
    apply,
    cayley_to_disk,
    compose,
    identity,
    scaling,
)


@pytest.fixture(scope="module")
def cyclic():
    return cyclic_hyperbolic(4.0)


@pytest.fixture(scope="module")
def rank_two():
    return symmetric_schottky(2, 0.3)


def test_cyclic_orbit_count(cyclic):
    orbit = enumerate_orbit(cyclic, 3)
    assert len(orbit) == 7
    assert sorted(len(w) for w in orbit.words) == [0, 1, 1, 2, 2, 3, 3]


@pytest.mark.parametrize("max_len", [1, 2, 4])
def test_free_group_sphere_sizes(rank_two, max_len):
    orbit = enumerate_orbit(rank_two, max_len)
    expected = 1 + sum(4 * 3 ** (k - 1) for k in range(1, max_len + 1))
    assert len(orbit) == expected


def test_reflection_group_count():
    group = symmetric_reflection_group(3, 0.5)
    orbit = enumerate_orbit(group, 2)
    assert len(orbit) == 1 + 3 + 6
    for word in orbit.words:
        assert all(a != b for a, b in zip(word, word[1:]))


def test_orbit_words_unique_and_points_inside_disk(rank_two):
    orbit = enumerate_orbit(rank_two, 5)
    words = orbit.words
    assert len(set(words)) == len(words)
    assert np.all(np.abs(orbit.points) < 1.0)


def test_orbit_points_match_elements(rank_two):
    orbit = enumerate_orbit(rank_two, 3)
    for i in range(0, len(orbit), 7):
        g = orbit.element(i)
        assert apply(g, 0.0) == pytest.approx(orbit.points[i], abs=1e-12)


def test_ball_is_prefix_of_larger_ball(rank_two):
    small = enumerate_orbit(rank_two, 3)
    large = enumerate_orbit(rank_two, 4)
    truncated = large.truncate(3)
    assert truncated.words == small.words
    np.testing.assert_allclose(truncated.points, small.points, atol=1e-12)


def test_enumerate_orbit_rejects_zero_length(cyclic):
    with pytest.raises(DepthOutOfRange):
        enumerate_orbit(cyclic, 0)


def test_two_circle_orbit_distances_are_multiples_of_translation_length():
    group = two_circle_schottky(0.1)
    step = 2.0 * math.acosh(abs(group.generators[0].trace) / 2.0)
    orbit = enumerate_orbit(group, 14)
    assert np.all(np.isfinite(orbit.distances))
    np.testing.assert_allclose(orbit.distances, orbit.lengths * step, rtol=1e-9)


def test_orbit_distances_grow_by_translation_length_of_product():
    group = symmetric_schottky(2, 0.2)
    orbit = enumerate_orbit(group, 9)
    assert np.all(np.isfinite(orbit.distances))
    assert np.all(np.isfinite(orbit.log_boundary_gap))
    h = compose(group.generators[0], group.generators[1])
    step = 2.0 * math.acosh(abs(h.trace) / 2.0)
    index = {w: i for i, w in enumerate(orbit.words)}
    far = orbit.distances[index[(0, 1) * 4]]
    near = orbit.distances[index[(0, 1) * 3]]
    assert far - near == pytest.approx(step, rel=1e-6)


def test_reflection_orbit_finite_at_length_fourteen():
    orbit = enumerate_orbit(symmetric_reflection_group(3, 0.5), 14)
    assert len(orbit) == 1 + sum(3 * 2 ** (k - 1) for k in range(1, 15))
    assert np.all(np.isfinite(orbit.distances))
    assert np.all(np.diff(shell_sums(orbit, 1.0)) < 0)


def test_poincare_sum_identity_ball_and_zero_exponent(rank_two):
    trivial = GroupPresentation((), (), GroupKind.SCHOTTKY)
    orbit = enumerate_orbit(trivial, 3)
    assert len(orbit) == 1
    assert poincare_partial_sum(orbit, 2.5) == pytest.approx(1.0)

    ball = enumerate_orbit(rank_two, 3)
    assert poincare_partial_sum(ball, 0.0) == pytest.approx(len(ball))


def test_poincare_sum_monotone(rank_two):
    ball = enumerate_orbit(rank_two, 4)
    values = [poincare_partial_sum(ball, t) for t in (0.0, 0.25, 0.5, 1.0, 2.0)]
    assert all(b <= a for a, b in zip(values, values[1:]))
    smaller = poincare_partial_sum(ball.truncate(3), 1.0)
    assert smaller <= poincare_partial_sum(ball, 1.0)


def test_poincare_sum_cyclic_closed_form(cyclic):
    # g^n(0) = eta(4^n i) has 1 - |g^n(0)| = 2 / (4^|n| + 1)
    orbit = enumerate_orbit(cyclic, 20)
    expected = 1.0 + 2.0 * sum(2.0 / (4.0 ** n + 1.0) for n in range(1, 21))
    assert poincare_partial_sum(orbit, 1.0) == pytest.approx(expected, rel=1e-10)


def test_exponential_kernel(cyclic):
    orbit = enumerate_orbit(cyclic, 5)
    # rho(0, g^n(0)) = |n| log 4
    expected = 1.0 + 2.0 * sum(4.0 ** -n for n in range(1, 6))
    assert poincare_partial_sum(orbit, 1.0, kernel="exponential") == pytest.approx(expected, rel=1e-10)
    with pytest.raises(ValueError):
        poincare_partial_sum(orbit, 1.0, kernel="gaussian")


def test_shell_sums_add_up(rank_two):
    ball = enumerate_orbit(rank_two, 4)
    assert shell_sums(ball).sum() == pytest.approx(poincare_partial_sum(ball, 1.0))


def test_counting_function_nondecreasing(rank_two):
    ball = enumerate_orbit(rank_two, 4)
    radii = np.linspace(0, float(ball.distances.max()), 30)
    counts = counting_function(ball, radii)
    assert np.all(np.diff(counts) >= 0)
    assert counts[-1] == len(ball)


def test_critical_exponent_cyclic_near_zero(cyclic):
    estimate = critical_exponent_estimate(enumerate_orbit(cyclic, 20))
    assert 0.0 <= estimate.value < 0.05


def test_critical_exponent_reports_log_radius_term_separately(cyclic):
    # N(R) = 2 floor(R / l) + 1 grows like R, so the R coefficient stays near 0
    estimate = critical_exponent_estimate(enumerate_orbit(cyclic, 20))
    assert estimate.value < 0.05
    assert estimate.details["log_radius_coefficient"] == pytest.approx(1.0, abs=0.5)


def test_critical_exponent_grows_with_radius():
    small = critical_exponent_estimate(enumerate_orbit(symmetric_schottky(2, 0.3), 7))
    large = critical_exponent_estimate(enumerate_orbit(symmetric_schottky(2, 0.6), 7))
    assert 0.0 <= small.value < large.value


def test_critical_exponent_needs_shells(cyclic):
    with pytest.raises(InsufficientData):
        critical_exponent_estimate(enumerate_orbit(cyclic, 1))


def test_probe_cyclic_convergent(cyclic):
    report = convergence_type_probe(cyclic, 12)
    assert report.verdict is ConvergenceVerdict.CONVERGENT
    assert len(report.rows()) == 12
    assert all(b >= a for a, b in zip(report.partial_sums, report.partial_sums[1:]))


def test_probe_schottky_convergent(rank_two):
    assert convergence_type_probe(rank_two, 8).verdict is ConvergenceVerdict.CONVERGENT


def test_probe_identity_inconclusive():
    trivial = GroupPresentation((), (), GroupKind.SCHOTTKY)
    assert convergence_type_probe(trivial, 6).verdict is ConvergenceVerdict.INCONCLUSIVE


def test_probe_needs_length_four(cyclic):
    with pytest.raises(DepthOutOfRange):
        convergence_type_probe(cyclic, 3)


def test_overlapping_circles_rejected():
    with pytest.raises(SeparationViolated):
        symmetric_schottky(2, 1.2)


def test_non_isometry_rejected():
    with pytest.raises(NotAnIsometry):
        schottky_group([scaling(2)], [Circle(0.5, 0.1), Circle(-0.5, 0.1)], [(0, 1)])


def test_two_circle_group_is_rank_one():
    group = two_circle_schottky(0.1)
    assert group.letter_count == 2
    assert group.inverse_table == (1, 0)
    assert group.classify_generators() == [MoebiusKind.HYPERBOLIC, MoebiusKind.HYPERBOLIC]


def test_section5_depth_range():
    with pytest.raises(DepthOutOfRange):
        build_section5_group(0)
    with pytest.raises(DepthOutOfRange):
        build_section5_group(31)


def test_section5_half_plane_disks():
    tangent = section5_half_plane_disks(3, Section5Convention.TANGENT)
    assert tangent[0].center == pytest.approx(1.0) and tangent[0].radius == pytest.approx(1.0)
    dyadic = section5_half_plane_disks(3, Section5Convention.DYADIC)
    assert dyadic[0].center == pytest.approx(1.5) and dyadic[0].radius == pytest.approx(0.5)
    assert tangent[2].center == pytest.approx(6.0) and tangent[2].radius == pytest.approx(2.0)


def test_section5_depth_one_dyadic_is_hyperbolic():
    group = build_section5_group(1, Section5Convention.DYADIC)
    assert group.classify_generators() == [MoebiusKind.HYPERBOLIC, MoebiusKind.HYPERBOLIC]


@pytest.mark.parametrize("depth", [5, 8])
def test_section5_diameters_comparable_to_dyadic_scale(depth):
    group = build_section5_group(depth)
    for n in range(1, depth + 1):
        scaled = group.circles[n - 1].diameter * 2.0 ** n
        assert 1.0 / 16.0 <= scaled <= 16.0


@pytest.mark.parametrize("convention", ["tangent", "dyadic"])
def test_section5_circles_disjoint_and_generators_not_elliptic(convention):
    group = build_section5_group(6, convention)
    circles = group.circles
    for i in range(len(circles)):
        for j in range(i + 1, len(circles)):
            assert circles[i].interiors_disjoint(circles[j])
    for kind in group.classify_generators():
        assert kind in (MoebiusKind.HYPERBOLIC, MoebiusKind.PARABOLIC)


def test_section5_circles_accumulate_at_i():
    group = build_section5_group(12)
    far = group.circles[11]
    assert abs(far.center - 1j) < 2.0 ** -8
    eta = cayley_to_disk()
    assert apply(eta, POINT_AT_INFINITY) == pytest.approx(1j, abs=1e-12)


def test_inverse_table_must_be_involution():
    with pytest.raises(ValueError):
        GroupPresentation((identity(), identity()), (1, 1), GroupKind.SCHOTTKY)
