"""End-to-end checks against closed forms and independent estimators."""
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from limit_dimension.bundled import BUNDLED_CONFIGS
from limit_dimension.cli import SUBCOMMANDS, main
from limit_dimension.config import load_config
from limit_dimension.group import enumerate_orbit, critical_exponent_estimate, symmetric_schottky, two_circle_schottky
from limit_dimension.ifs import (
    box_dimension_estimate,
    continued_fraction_system,
    ifs_from_schottky,
    limit_set_cylinders,
    limit_set_sample,
    moebius_system,
    similarity_system,
)
from limit_dimension.moebius import MoebiusMap
from limit_dimension.pressure import bowen_dimension, pressure_direct, transfer_eigenvalue

pytestmark = pytest.mark.slow

EXPERIMENT_TO_SUBCOMMAND = {experiment: name for name, experiment in SUBCOMMANDS.items()}


def finite_systems():
    return {
        "cf12": continued_fraction_system([1, 2]),
        "cf123": continued_fraction_system([1, 2, 3]),
        "moebius-pair": moebius_system([MoebiusMap(1, 0, 1, 2), MoebiusMap(1, 2, 1, 3)]),
        "similarity-three": similarity_system([0.2, 0.3, 0.4], [0.0, 0.25, 0.6]),
        "schottky-rank2": ifs_from_schottky(symmetric_schottky(2, 0.3)),
    }


def test_moran_oracle_sweep():
    rng = np.random.default_rng(20240611)
    for r1, r2 in rng.uniform(0.02, 0.45, size=(50, 2)):
        system = similarity_system([r1, r2], [0.0, 1.0 - r2])
        expected = brentq(lambda s: r1 ** s + r2 ** s - 1.0, 0.0, 1.0, xtol=1e-14)
        assert bowen_dimension(system, tol=1e-12).value == pytest.approx(expected, abs=1e-8)


@pytest.mark.parametrize("name", sorted(finite_systems()))
def test_spectral_pressure_inside_direct_bracket(name):
    system = finite_systems()[name]
    for sigma in np.linspace(0.1, 1.0, 10):
        direct = pressure_direct(system, float(sigma), n_max=10)
        spectral = transfer_eigenvalue(system, float(sigma))
        assert direct.lower - 1e-7 <= spectral.value <= direct.upper + 1e-7, sigma


def test_continued_fraction_self_consistency():
    system = continued_fraction_system([1, 2])
    coarse = bowen_dimension(system, size=16).value
    fine = bowen_dimension(system, size=32).value
    assert coarse == pytest.approx(fine, abs=1e-6)

    points = limit_set_sample(system, 14)
    boxed = box_dimension_estimate(points, scales=[2.0 ** -k for k in range(4, 13)])
    assert boxed.value == pytest.approx(fine, abs=2e-2)


def test_spectral_sizes_agree_on_schottky():
    system = ifs_from_schottky(symmetric_schottky(2, 0.3))
    coarse = transfer_eigenvalue(system, 0.4, size=16).value
    fine = transfer_eigenvalue(system, 0.4, size=32).value
    assert coarse == pytest.approx(fine, abs=1e-8)


def test_two_circle_orbit_growth_matches_bowen_dimension():
    group = two_circle_schottky(0.1)
    delta = critical_exponent_estimate(enumerate_orbit(group, 14)).value
    assert delta == pytest.approx(bowen_dimension(ifs_from_schottky(group)).value, abs=0.05)


def test_rank_two_orbit_growth_matches_bowen_dimension():
    group = symmetric_schottky(2, 0.3)
    delta = critical_exponent_estimate(enumerate_orbit(group, 11)).value
    assert delta == pytest.approx(bowen_dimension(ifs_from_schottky(group)).value, abs=0.05)


def test_schottky_box_count_matches_bowen_dimension():
    system = ifs_from_schottky(symmetric_schottky(2, 0.3))
    sample = limit_set_cylinders(system, 12, on_circle=True)
    assert len(sample) == 4 * 3 ** 11
    assert np.all(np.isfinite(sample.centers))
    boxed = box_dimension_estimate(sample)
    assert boxed.value == pytest.approx(bowen_dimension(system).value, abs=0.03)


@pytest.mark.parametrize("name", sorted(n for n in BUNDLED_CONFIGS if not n.startswith("malformed")))
def test_bundled_config_outputs_are_reproducible(name, tmp_path):
    subcommand = EXPERIMENT_TO_SUBCOMMAND[load_config(f"bundled:{name}").experiment]
    for run in ("first", "second"):
        assert main([subcommand, "--config", f"bundled:{name}", "--out", str(tmp_path / run)]) == 0
    produced = sorted(p.name for p in (tmp_path / "first").iterdir())
    assert produced == [f"{name}.csv", f"{name}.json"]
    for filename in produced:
        assert (tmp_path / "first" / filename).read_bytes() == (tmp_path / "second" / filename).read_bytes()
