"""
Command-line interface.

    limit-dimension dim --config bundled:middle-thirds --out results/
    limit-dimension section5 --depth 5
    limit-dimension curve --config family.toml --threads 4

Every run writes <prefix>.csv and <prefix>.json into the output directory.
Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""
import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .bundled import list_bundled_configs
from .config import ExperimentConfig, build_family, build_group, build_system, config_from_dict, load_config
from .deform import DimensionCurve, analyticity_diagnostic, dimension_curve
from .errors import ConfigError, ErrorFloorTooHigh, InsufficientData, LimitDimensionError
from .export import config_digest, content_digest, csv_text, json_text, provenance, write_text
from .group import convergence_type_probe, critical_exponent_estimate, enumerate_orbit, poincare_partial_sum
from .ifs import theta_number
from .moebius import POINT_AT_INFINITY, apply, cayley_to_disk, classify
from .performance import profile_call, stats_report
from .pressure import bowen_dimension, pressure_curve, regularity_check
from .run_archive import RunArchive

logger = logging.getLogger(__name__)

OUTPUT_ENV = "LIMIT_DIMENSION_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# subcommand -> experiment kind
SUBCOMMANDS = {
    "dim": "dim",
    "pressure": "pressure-curve",
    "curve": "dimension-curve",
    "orbit": "orbit",
    "schottky": "schottky-build",
    "section5": "section5",
    "probe-type": "probe-type",
}

CSV_COLUMNS = {
    "dim": ("dimension", "lower", "upper", "error", "method"),
    "pressure-curve": ("sigma", "value", "lower", "upper"),
    "dimension-curve": ("t", "dim", "err"),
    "orbit": ("word", "re_g0", "im_g0", "rho"),
    "schottky-build": ("circle", "re_center", "im_center", "radius", "arc_start", "arc_end", "paired_with"),
    "section5": ("n", "re_center", "im_center", "radius", "diameter", "diameter_scaled", "generator_kind"),
    "probe-type": ("length", "shell_sum", "partial_sum"),
}

HELP = {
    "dim": "Hausdorff dimension of an IFS (or a group's IFS) by the Bowen equation",
    "pressure": "pressure function on a sigma grid",
    "curve": "dimension curve of a deformation family with the analyticity diagnostic",
    "orbit": "orbit ball, orbit points and critical exponent estimate",
    "schottky": "circle table of a Schottky or reflection group",
    "section5": "dyadic disk construction with diameter scaling table",
    "probe-type": "convergence-type probe of the Poincaré series at exponent 1",
}


@dataclass
class RunOutcome:
    csv_path: Path
    json_path: Path
    summary: Dict[str, Any]
    outputs_digest: str
    curve: Optional[DimensionCurve] = None


# Experiments: each returns (rows, result record, curve or None)

def _run_dim(config: ExperimentConfig):
    params = config.parameters
    system = build_system(config.system)
    result = bowen_dimension(system, method=params.method, size=params.size, n_max=params.n_max, tol=params.tolerance)
    rows = [(result.value, result.lower, result.upper, result.error, result.method)]
    return rows, {"dimension": result.to_dict(), "system": system.name}, None


def _run_pressure_curve(config: ExperimentConfig):
    params = config.parameters
    system = build_system(config.system)
    theta = theta_number(system)
    grid = np.linspace(params.sigma_lo, params.sigma_hi, params.sigma_count)
    sigmas = [float(s) for s in grid if s > theta]
    if len(sigmas) < len(grid):
        logger.warning("skipping %d sigma values at or below theta=%g", len(grid) - len(sigmas), theta)
    estimates = pressure_curve(
        system, sigmas, method=params.method, size=params.size, n_max=params.n_max, threads=params.threads
    )
    values = [e.value for e in estimates]
    decreasing = all(b < a for a, b in zip(values, values[1:]))
    rows = [(e.sigma, e.value, e.lower, e.upper) for e in estimates]
    record = {
        "theta": theta,
        "regularity": regularity_check(system).value,
        "strictly_decreasing": decreasing,
        "skipped": len(grid) - len(sigmas),
        "method": params.method.value,
    }
    return rows, record, None


def _run_dimension_curve(config: ExperimentConfig):
    params = config.parameters
    family = build_family(config.family)
    curve = dimension_curve(
        family, params.m, method=params.method, size=params.size, tol=params.tolerance, threads=params.threads
    )
    record: Dict[str, Any] = {
        "family": family.name,
        "t_range": [family.t_lo, family.t_hi],
        "m": curve.m,
        "lipschitz": curve.lipschitz_estimate(),
    }
    if params.diagnostic:
        try:
            record["diagnostic"] = analyticity_diagnostic(curve).to_dict()
        except (InsufficientData, ErrorFloorTooHigh) as e:
            logger.warning("analyticity diagnostic skipped: %s", e)
            record["diagnostic"] = {"verdict": "skipped", "reason": str(e)}
    return curve.rows(), record, curve


def _word_label(word: Sequence[int]) -> str:
    return ".".join(str(letter) for letter in word) if word else "e"


def _run_orbit(config: ExperimentConfig):
    params = config.parameters
    group = build_group(config.system)
    orbit = enumerate_orbit(group, params.max_len)
    rows = [
        (_word_label(orbit.word(i)), orbit.points[i].real, orbit.points[i].imag, orbit.distances[i])
        for i in range(len(orbit))
    ]
    record: Dict[str, Any] = {
        "group": group.name,
        "elements": len(orbit),
        "max_len": orbit.max_len,
        "poincare_partial_sum": poincare_partial_sum(orbit, 1.0, kernel=params.kernel),
        "kernel": params.kernel,
    }
    try:
        record["critical_exponent"] = critical_exponent_estimate(orbit).to_dict()
    except InsufficientData as e:
        logger.warning("critical exponent not estimated: %s", e)
        record["critical_exponent"] = None
    return rows, record, None


def _circle_partners(group) -> Dict[int, int]:
    partners = {}
    for source, target in group.pairing:
        partners[source] = target
        partners[target] = source
    return partners


def _run_schottky_build(config: ExperimentConfig):
    group = build_group(config.system)
    partners = _circle_partners(group)
    rows = []
    for idx, circle in enumerate(group.circles):
        start, end = circle.unit_circle_arc()
        rows.append((idx, circle.center.real, circle.center.imag, circle.radius, start, end, partners.get(idx, -1)))
    record = {
        "group": group.name,
        "kind": group.kind.value,
        "letters": group.letter_count,
        "generator_kinds": [k.value if k is not None else None for k in group.classify_generators()],
        "separated": True,
    }
    return rows, record, None


def _run_section5(config: ExperimentConfig):
    group = build_group(config.system)
    depth = len(group.pairing) // 2
    rows = []
    for n in range(1, depth + 1):
        circle = group.circles[n - 1]
        rows.append((
            n,
            circle.center.real,
            circle.center.imag,
            circle.radius,
            circle.diameter,
            circle.diameter * 2.0 ** n,
            classify(group.generators[n - 1]).value,
        ))
    disks = group.circles[:depth]
    disjoint = all(
        disks[i].interiors_disjoint(disks[j]) for i in range(depth) for j in range(i + 1, depth)
    )
    eta = cayley_to_disk()
    scaled = [row[5] for row in rows]
    record = {
        "group": group.name,
        "depth": depth,
        "pairwise_disjoint": disjoint,
        "diameter_scaled_range": [min(scaled), max(scaled)],
        "cayley_checkpoints": {
            "infinity": apply(eta, POINT_AT_INFINITY),
            "one": apply(eta, 1.0),
            "zero": apply(eta, 0.0),
        },
    }
    return rows, record, None


def _run_probe_type(config: ExperimentConfig):
    group = build_group(config.system)
    report = convergence_type_probe(group, config.parameters.max_len)
    record = {"group": group.name, "verdict": report.verdict.value, "ratios": list(report.ratios)}
    return report.rows(), record, None


EXPERIMENT_RUNNERS = {
    "dim": _run_dim,
    "pressure-curve": _run_pressure_curve,
    "dimension-curve": _run_dimension_curve,
    "orbit": _run_orbit,
    "schottky-build": _run_schottky_build,
    "section5": _run_section5,
    "probe-type": _run_probe_type,
}


def run_experiment(config: ExperimentConfig, out_dir: Path) -> RunOutcome:
    """
    Run one experiment and write <prefix>.csv and <prefix>.json.

    Raises:
        ConfigError: definition tables that cannot be built
        LimitDimensionError: numeric failures from the library
    """
    out_dir = Path(out_dir)
    rows, record, curve = EXPERIMENT_RUNNERS[config.experiment](config)
    csv_name = f"{config.output_prefix}.csv"
    params = config.parameters

    summary = {
        "experiment": config.experiment,
        "config": config.raw,
        "config_digest": config_digest(config.raw),
        "provenance": dict(provenance(), method=params.method.value, tolerance=params.tolerance),
        "result": record,
        "outputs": {"csv": csv_name, "columns": list(CSV_COLUMNS[config.experiment])},
    }
    csv_body = csv_text(CSV_COLUMNS[config.experiment], rows)
    json_body = json_text(summary)
    csv_path = write_text(out_dir / csv_name, csv_body)
    json_path = write_text(out_dir / f"{config.output_prefix}.json", json_body)
    logger.info("wrote %s and %s", csv_path, json_path)
    return RunOutcome(csv_path, json_path, summary, content_digest(csv_body, json_body), curve)


def run(
    config: ExperimentConfig,
    out_dir: Path,
    archive: Optional[Path] = None,
    profile: bool = False,
) -> int:
    """Run an experiment and map errors to exit codes"""
    try:
        if profile:
            outcome, stats = profile_call(run_experiment, config, out_dir)
            sys.stderr.write(stats_report(stats))
        else:
            outcome = run_experiment(config, out_dir)
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except LimitDimensionError as e:
        logger.error("%s: %s", type(e).__name__, e)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC

    if archive is not None:
        ledger = RunArchive(archive)
        run_id = ledger.record_run(
            outcome.summary["config_digest"], config.experiment, outcome.summary["result"], outcome.outputs_digest
        )
        if outcome.curve is not None:
            ledger.record_curve(run_id, outcome.curve)

    print(outcome.json_path)
    return EXIT_OK


def _section5_config(args) -> ExperimentConfig:
    raw = {
        "schema_version": 1,
        "experiment": "section5",
        "system": {"kind": "section5", "depth": args.depth, "convention": args.convention, "shrink": args.shrink},
        "output": {"prefix": f"section5-depth{args.depth}"},
    }
    return config_from_dict(raw, source="command line")


def _add_common_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="TOML config path or bundled:<name>")
    parser.add_argument("--out", type=Path, help=f"output directory (default: ${OUTPUT_ENV} or .)")
    parser.add_argument("--threads", type=int, help="worker thread cap")
    parser.add_argument("--tolerance", type=float, help="solver tolerance override")
    parser.add_argument("--archive", type=Path, help="SQLite run archive to append to")
    parser.add_argument("--profile", action="store_true", help="print cProfile statistics to stderr")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="limit-dimension",
        description="Hausdorff dimension of limit sets of conformal IFS and Fuchsian groups",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, experiment in SUBCOMMANDS.items():
        columns = ", ".join(CSV_COLUMNS[experiment])
        sub = commands.add_parser(name, help=HELP[name], description=HELP[name], epilog=f"CSV columns: {columns}")
        _add_common_flags(sub)
        if name == "section5":
            sub.add_argument("--depth", type=int, default=5, help="number of disks (1..30)")
            sub.add_argument("--convention", choices=("tangent", "dyadic"), default="tangent")
            sub.add_argument("--shrink", type=float, default=0.0, help="relative radius reduction in [0, 1)")

    commands.add_parser("bundled", help="list bundled configs")
    return parser


def _configure_logging(verbosity: int):
    level = logging.WARNING if verbosity <= 0 else (logging.INFO if verbosity == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "bundled":
        for name in list_bundled_configs():
            print(name)
        return EXIT_OK

    _configure_logging(args.verbose)
    experiment = SUBCOMMANDS[args.command]
    try:
        if args.config:
            config = load_config(args.config)
        elif args.command == "section5":
            config = _section5_config(args)
        else:
            raise ConfigError(f"'{args.command}' needs --config PATH or --config bundled:<name>")
        if config.experiment != experiment:
            raise ConfigError(
                f"config runs experiment {config.experiment!r} but subcommand '{args.command}' expects {experiment!r}"
            )
        config = config.with_overrides(threads=args.threads, tolerance=args.tolerance)
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = args.out or Path(os.environ.get(OUTPUT_ENV, "."))
    return run(config, out_dir, archive=args.archive, profile=args.profile)


if __name__ == "__main__":
    sys.exit(main())
