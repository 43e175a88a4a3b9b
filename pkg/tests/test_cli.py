import csv
import json
import math

import pytest

from limit_dimension.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, OUTPUT_ENV, main, run_experiment
from limit_dimension.config import load_config
from limit_dimension.run_archive import RunArchive


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_dim_middle_thirds(tmp_path, capsys):
    code = main(["dim", "--config", "bundled:middle-thirds", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert str(tmp_path / "middle-thirds.json") in capsys.readouterr().out

    rows = read_csv(tmp_path / "middle-thirds.csv")
    assert rows[0] == ["dimension", "lower", "upper", "error", "method"]
    assert float(rows[1][0]) == pytest.approx(math.log(2) / math.log(3), abs=1e-9)

    summary = read_json(tmp_path / "middle-thirds.json")
    assert summary["experiment"] == "dim"
    assert summary["config"]["system"]["ratios"] == ["1/3", "1/3"]
    assert summary["provenance"]["package"] == "limit_dimension"
    assert summary["provenance"]["method"] == "transfer-spectral"
    assert summary["outputs"]["csv"] == "middle-thirds.csv"
    assert len(summary["config_digest"]) == 64


def test_outputs_are_byte_identical_across_runs(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["dim", "--config", "bundled:moran-pair", "--out", str(first)]) == EXIT_OK
    assert main(["dim", "--config", "bundled:moran-pair", "--out", str(second)]) == EXIT_OK
    for name in ("moran-pair.csv", "moran-pair.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_malformed_config_exits_2_without_output(tmp_path, capsys):
    code = main(["dim", "--config", "bundled:malformed-two-systems", "--out", str(tmp_path)])
    assert code == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    assert list(tmp_path.iterdir()) == []


def test_subcommand_must_match_experiment(tmp_path):
    assert main(["orbit", "--config", "bundled:middle-thirds", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_config_exits_2(tmp_path):
    assert main(["dim", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["dim", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_numeric_failure_exits_3(tmp_path, capsys):
    path = tmp_path / "overlap.toml"
    path.write_text(
        'schema_version = 1\nexperiment = "dim"\n[system]\nkind = "schottky"\nrank = 2\nradius = 1.2\n',
        encoding="utf-8",
    )
    code = main(["dim", "--config", str(path), "--out", str(tmp_path / "out")])
    assert code == EXIT_NUMERIC
    assert "SeparationViolated" in capsys.readouterr().err


def test_section5_depth_five(tmp_path):
    assert main(["section5", "--depth", "5", "--out", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "section5-depth5.csv")
    assert rows[0][0] == "n"
    assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4", "5"]
    for row in rows[1:]:
        assert 1 / 16 <= float(row[5]) <= 16
        assert row[6] in ("hyperbolic", "parabolic")
    assert rows[1][6] == "parabolic"

    result = read_json(tmp_path / "section5-depth5.json")["result"]
    assert result["pairwise_disjoint"] is True
    assert result["cayley_checkpoints"]["infinity"] == pytest.approx([0.0, 1.0], abs=1e-12)
    assert result["cayley_checkpoints"]["zero"] == pytest.approx([0.0, -1.0], abs=1e-12)


def test_section5_depth_out_of_range(tmp_path):
    assert main(["section5", "--depth", "31", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["section5", "--depth", "0", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_section5_dyadic_convention(tmp_path):
    assert main(["section5", "--depth", "3", "--convention", "dyadic", "--out", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "section5-depth3.csv")
    assert all(r[6] == "hyperbolic" for r in rows[1:])


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env-out"))
    assert main(["orbit", "--config", "bundled:cyclic-hyperbolic"]) == EXIT_OK
    rows = read_csv(tmp_path / "env-out" / "cyclic-hyperbolic.csv")
    assert rows[0] == ["word", "re_g0", "im_g0", "rho"]
    assert rows[1][0] == "e"
    assert len(rows) == 1 + 41


def test_orbit_summary(tmp_path):
    assert main(["orbit", "--config", "bundled:schottky-symmetric", "--out", str(tmp_path)]) == EXIT_OK
    result = read_json(tmp_path / "schottky-symmetric.json")["result"]
    assert result["elements"] == 1 + sum(4 * 3 ** (k - 1) for k in range(1, 8))
    assert result["critical_exponent"]["method"] == "orbit-counting"


def test_probe_type(tmp_path):
    assert main(["probe-type", "--config", "bundled:reflection-three", "--out", str(tmp_path)]) == EXIT_OK
    result = read_json(tmp_path / "reflection-three.json")["result"]
    assert result["verdict"] == "appears-convergent"
    assert len(read_csv(tmp_path / "reflection-three.csv")) == 1 + 10


def test_schottky_build(tmp_path):
    path = tmp_path / "circles.toml"
    path.write_text(
        'schema_version = 1\nexperiment = "schottky-build"\n[system]\nkind = "schottky"\nrank = 2\nradius = 0.3\n',
        encoding="utf-8",
    )
    assert main(["schottky", "--config", str(path), "--out", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "schottky-build.csv")
    assert rows[0] == ["circle", "re_center", "im_center", "radius", "arc_start", "arc_end", "paired_with"]
    assert [r[6] for r in rows[1:]] == ["2", "3", "0", "1"]
    result = read_json(tmp_path / "schottky-build.json")["result"]
    assert result["generator_kinds"] == ["hyperbolic"] * 4


def test_pressure_curve_section5_tail(tmp_path):
    assert main(["pressure", "--config", "bundled:section5-tail", "--out", str(tmp_path)]) == EXIT_OK
    result = read_json(tmp_path / "section5-tail.json")["result"]
    assert result["strictly_decreasing"] is True
    assert result["skipped"] == 0
    assert result["theta"] == pytest.approx(0.5)
    assert len(read_csv(tmp_path / "section5-tail.csv")) == 1 + 20


def test_pressure_curve_skips_sigma_below_theta(tmp_path):
    path = tmp_path / "gauss.toml"
    path.write_text(
        'schema_version = 1\nexperiment = "pressure-curve"\n[system]\nkind = "gauss-tail"\n'
        '[parameters]\nsigma_lo = 0.05\nsigma_hi = 0.95\nsigma_count = 10\n',
        encoding="utf-8",
    )
    assert main(["pressure", "--config", str(path), "--out", str(tmp_path)]) == EXIT_OK
    result = read_json(tmp_path / "pressure-curve.json")["result"]
    assert result["skipped"] == 5
    assert result["regularity"] == "regular"


def test_curve_with_threads_and_tolerance_override(tmp_path):
    code = main([
        "curve", "--config", "bundled:similarity-family", "--threads", "2", "--tolerance", "1e-12",
        "--out", str(tmp_path),
    ])
    assert code == EXIT_OK
    summary = read_json(tmp_path / "similarity-family.json")
    assert summary["config"]["parameters"]["threads"] == 2
    assert summary["result"]["diagnostic"]["verdict"] == "consistent-with-analytic"
    rows = read_csv(tmp_path / "similarity-family.csv")
    assert rows[0] == ["t", "dim", "err"]
    assert len(rows) == 1 + 24
    ts = [float(r[0]) for r in rows[1:]]
    assert ts == sorted(ts)


def test_archive_records_reproducible_runs(tmp_path):
    archive = tmp_path / "runs.db"
    for sub in ("a", "b"):
        code = main(["dim", "--config", "bundled:moran-pair", "--out", str(tmp_path / sub), "--archive", str(archive)])
        assert code == EXIT_OK
    ledger = RunArchive(archive)
    runs = ledger.get_runs()
    assert len(runs) == 2
    assert runs[0].config_digest == runs[1].config_digest
    assert ledger.is_reproducible(runs[0].config_digest)


def test_profile_flag_reports_to_stderr(tmp_path, capsys):
    assert main(["dim", "--config", "bundled:moran-pair", "--profile", "--out", str(tmp_path)]) == EXIT_OK
    assert "function calls" in capsys.readouterr().err


def test_bundled_listing(capsys):
    assert main(["bundled"]) == EXIT_OK
    listed = capsys.readouterr().out.split()
    assert "section5-depth5" in listed
    assert "malformed-two-systems" in listed


def test_run_experiment_returns_outcome(tmp_path):
    outcome = run_experiment(load_config("bundled:gauss-parabolic-tail"), tmp_path)
    dimension = outcome.summary["result"]["dimension"]
    assert dimension["lower"] <= 1.0 <= dimension["upper"]
    assert outcome.csv_path.exists() and outcome.json_path.exists()
    assert len(outcome.outputs_digest) == 64
