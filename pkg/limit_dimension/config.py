"""
Experiment configuration.

Configs are TOML documents with a versioned schema:

    schema_version = 1
    experiment = "dim"          # dim, pressure-curve, dimension-curve, orbit,
                                # schottky-build, section5, probe-type
    [system] or [family]        # exactly one
    [parameters]                # optional numeric settings
    [output]                    # optional, prefix of the output files

Numbers may be TOML numbers or exact "p/q" strings.
"""
import copy
import logging
import tomllib
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from .bundled import get_bundled_config
from .deform import (
    DeformationFamily,
    polynomial_family,
    schottky_radius_family,
    similarity_family,
    symmetric_similarity_family,
    tail_exponent_family,
)
from .errors import ConfigError, LimitDimensionError
from .group import (
    MAX_SECTION5_DEPTH,
    GroupPresentation,
    Section5Convention,
    build_section5_group,
    cyclic_hyperbolic,
    reflection_group,
    symmetric_reflection_group,
    symmetric_schottky,
)
from .ifs import (
    DEFAULT_HEAD,
    IfsSystem,
    continued_fraction_system,
    gauss_parabolic_model,
    ifs_from_schottky,
    moebius_system,
    section5_tail_model,
    similarity_system,
)
from .moebius import Circle, MoebiusMap
from .results import PressureMethod

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
BUNDLED_PREFIX = "bundled:"

EXPERIMENTS = (
    "dim",
    "pressure-curve",
    "dimension-curve",
    "orbit",
    "schottky-build",
    "section5",
    "probe-type",
)
IFS_KINDS = ("similarity", "moebius", "continued-fraction", "gauss-tail", "section5-tail")
GROUP_KINDS = ("schottky", "reflection", "cyclic", "section5")
FAMILY_KINDS = ("similarity", "schottky-radius", "tail-exponent", "moebius")

# experiment -> which definition table it needs
_NEEDS = {
    "dim": "system",
    "pressure-curve": "system",
    "dimension-curve": "family",
    "orbit": "group",
    "schottky-build": "group",
    "section5": "group",
    "probe-type": "group",
}


@dataclass(frozen=True)
class ExperimentParameters:
    method: PressureMethod = PressureMethod.SPECTRAL
    size: int = 16
    n_max: int = 8
    m: int = 24
    max_len: int = 8
    tolerance: float = 1e-10
    threads: int = 1
    sigma_lo: float = 0.1
    sigma_hi: float = 1.0
    sigma_count: int = 10
    kernel: str = "boundary"
    diagnostic: bool = True

    def validate(self) -> None:
        checks = [
            (self.size >= 4, "size must be at least 4"),
            (self.n_max >= 2, "n_max must be at least 2"),
            (self.m >= 8, "m must be at least 8"),
            (self.max_len >= 1, "max_len must be at least 1"),
            (self.tolerance > 0, "tolerance must be positive"),
            (self.threads >= 1, "threads must be at least 1"),
            (self.sigma_count >= 2, "sigma_count must be at least 2"),
            (self.sigma_lo < self.sigma_hi, "sigma_lo must be below sigma_hi"),
            (self.kernel in ("boundary", "exponential"), "kernel must be 'boundary' or 'exponential'"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(f"[parameters] {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment definition; raw is the document echoed into outputs"""
    experiment: str
    system: Optional[Dict[str, Any]]
    family: Optional[Dict[str, Any]]
    parameters: ExperimentParameters
    output_prefix: str
    raw: Dict[str, Any] = field(compare=False)
    source: str = ""

    def with_overrides(self, threads: Optional[int] = None, tolerance: Optional[float] = None) -> "ExperimentConfig":
        """Apply command-line overrides to both the parameters and the echoed document"""
        changes = {}
        raw = copy.deepcopy(self.raw)
        section = raw.setdefault("parameters", {})
        if threads is not None:
            changes["threads"] = int(threads)
            section["threads"] = int(threads)
        if tolerance is not None:
            changes["tolerance"] = float(tolerance)
            section["tolerance"] = float(tolerance)
        if not changes:
            return self
        params = replace(self.parameters, **changes)
        params.validate()
        return replace(self, parameters=params, raw=raw)


# Scalar parsing

def parse_number(value: Any, key: str) -> float:
    """TOML number or "p/q" string as float"""
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"{key}: cannot parse {value!r} as a number") from None
    raise ConfigError(f"{key}: expected a number, got {type(value).__name__}")


def parse_int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return value


def parse_numbers(value: Any, key: str) -> List[float]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key}: expected a non-empty list")
    return [parse_number(v, f"{key}[{i}]") for i, v in enumerate(value)]


def parse_polynomial(value: Any, key: str) -> List[float]:
    """Polynomial in t: a number (constant) or coefficients in increasing degree"""
    if isinstance(value, list):
        return parse_numbers(value, key)
    return [parse_number(value, key)]


def _require(table: Dict[str, Any], key: str, where: str) -> Any:
    if key not in table:
        raise ConfigError(f"[{where}] missing required key {key!r}")
    return table[key]


def _parse_parameters(table: Dict[str, Any]) -> ExperimentParameters:
    known = set(ExperimentParameters.__dataclass_fields__)
    unknown = sorted(set(table) - known)
    if unknown:
        raise ConfigError(f"[parameters] unknown keys: {', '.join(unknown)}")
    values: Dict[str, Any] = {}
    for key, value in table.items():
        name = f"parameters.{key}"
        if key == "method":
            try:
                values[key] = PressureMethod(value)
            except ValueError:
                choices = ", ".join(m.value for m in PressureMethod)
                raise ConfigError(f"{name}: unknown method {value!r} (choose from {choices})") from None
        elif key in ("size", "n_max", "m", "max_len", "threads", "sigma_count"):
            values[key] = parse_int(value, name)
        elif key == "kernel":
            values[key] = str(value)
        elif key == "diagnostic":
            if not isinstance(value, bool):
                raise ConfigError(f"{name}: expected true or false")
            values[key] = value
        else:
            values[key] = parse_number(value, name)
    params = ExperimentParameters(**values)
    params.validate()
    return params


def config_from_dict(raw: Dict[str, Any], source: str = "") -> ExperimentConfig:
    """
    Validate a parsed document.

    Raises:
        ConfigError: schema mismatch, unknown experiment, missing or
            conflicting system/family tables, bad parameter values
    """
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")

    experiment = raw.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r} (choose from {', '.join(EXPERIMENTS)})")

    system, family = raw.get("system"), raw.get("family")
    if system is not None and family is not None:
        raise ConfigError("config defines both [system] and [family]; exactly one is allowed")
    if system is None and family is None:
        raise ConfigError("config defines neither [system] nor [family]")

    need = _NEEDS[experiment]
    if need == "family" and family is None:
        raise ConfigError(f"experiment {experiment!r} needs a [family] table")
    if need != "family" and system is None:
        raise ConfigError(f"experiment {experiment!r} needs a [system] table")

    definition = system if system is not None else family
    if not isinstance(definition, dict):
        raise ConfigError("[system]/[family] must be a table")
    kind = definition.get("kind")
    where = "system" if system is not None else "family"
    allowed = {
        "system": IFS_KINDS + GROUP_KINDS,
        "group": GROUP_KINDS,
        "family": FAMILY_KINDS,
    }[need]
    if kind not in allowed:
        raise ConfigError(f"[{where}] kind {kind!r} is not valid for {experiment!r} (choose from {', '.join(allowed)})")
    if experiment == "section5" and kind != "section5":
        raise ConfigError("experiment 'section5' needs a system of kind 'section5'")
    if kind == "section5" and system is not None:
        depth = parse_int(_require(system, "depth", "system"), "system.depth")
        if not 1 <= depth <= MAX_SECTION5_DEPTH:
            raise ConfigError(f"system.depth must lie in 1..{MAX_SECTION5_DEPTH}, got {depth}")

    params = _parse_parameters(raw.get("parameters", {}))
    output = raw.get("output", {})
    prefix = str(output.get("prefix", experiment))
    if not prefix or "/" in prefix or "\\" in prefix:
        raise ConfigError(f"[output] prefix {prefix!r} is not a plain file name")

    return ExperimentConfig(
        experiment=experiment,
        system=system,
        family=family,
        parameters=params,
        output_prefix=prefix,
        raw=raw,
        source=source,
    )


def parse_config(text: str, source: str = "") -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{source or 'config'}: invalid TOML: {e}") from e
    return config_from_dict(raw, source)


def load_config(source: Union[str, Path]) -> ExperimentConfig:
    """Read a config file or a bundled config ("bundled:<name>")"""
    source = str(source)
    if source.startswith(BUNDLED_PREFIX):
        name = source[len(BUNDLED_PREFIX):]
        return parse_config(get_bundled_config(name), source)
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    logger.debug("loaded config %s", path)
    return parse_config(text, source)


# Builders

def _wrap(where: str, build):
    """Run a builder; argument errors become ConfigError, numeric errors propagate"""
    try:
        return build()
    except LimitDimensionError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError(f"[{where}] {e}") from e


def build_group(table: Dict[str, Any]) -> GroupPresentation:
    kind = table.get("kind")
    if kind == "schottky":
        rank = parse_int(_require(table, "rank", "system"), "system.rank")
        radius = parse_number(_require(table, "radius", "system"), "system.radius")
        return _wrap("system", lambda: symmetric_schottky(rank, radius))
    if kind == "reflection":
        if "circles" in table:
            circles = []
            for i, entry in enumerate(table["circles"]):
                values = parse_numbers(entry, f"system.circles[{i}]")
                if len(values) != 3:
                    raise ConfigError(f"system.circles[{i}]: expected [re, im, radius]")
                circles.append(values)
            return _wrap(
                "system",
                lambda: reflection_group([Circle(complex(x, y), r) for x, y, r in circles], name="reflection"),
            )
        count = parse_int(_require(table, "count", "system"), "system.count")
        radius = parse_number(_require(table, "radius", "system"), "system.radius")
        return _wrap("system", lambda: symmetric_reflection_group(count, radius))
    if kind == "cyclic":
        multiplier = parse_number(_require(table, "multiplier", "system"), "system.multiplier")
        return _wrap("system", lambda: cyclic_hyperbolic(multiplier))
    if kind == "section5":
        depth = parse_int(_require(table, "depth", "system"), "system.depth")
        convention = table.get("convention", Section5Convention.TANGENT.value)
        shrink = parse_number(table.get("shrink", 0.0), "system.shrink")
        return _wrap("system", lambda: build_section5_group(depth, convention, shrink))
    raise ConfigError(f"[system] kind {kind!r} is not a group")


def build_system(table: Dict[str, Any]) -> IfsSystem:
    kind = table.get("kind")
    if kind in GROUP_KINDS:
        group = build_group(table)
        return ifs_from_schottky(group)
    if kind == "similarity":
        ratios = parse_numbers(_require(table, "ratios", "system"), "system.ratios")
        offsets = parse_numbers(_require(table, "offsets", "system"), "system.offsets")
        interval = parse_numbers(table.get("interval", [0, 1]), "system.interval")
        return _wrap("system", lambda: similarity_system(ratios, offsets, tuple(interval), name="similarity"))
    if kind == "moebius":
        maps = []
        for i, entry in enumerate(_require(table, "maps", "system")):
            coef = parse_numbers(entry, f"system.maps[{i}]")
            if len(coef) != 4:
                raise ConfigError(f"system.maps[{i}]: expected [a, b, c, d]")
            maps.append(coef)
        interval = parse_numbers(table.get("interval", [0, 1]), "system.interval")
        return _wrap(
            "system", lambda: moebius_system([MoebiusMap(*c) for c in maps], tuple(interval), name="moebius")
        )
    if kind == "continued-fraction":
        digits = [parse_int(d, "system.digits") for d in _require(table, "digits", "system")]
        return _wrap("system", lambda: continued_fraction_system(digits))
    if kind == "gauss-tail":
        head = parse_int(table.get("head", DEFAULT_HEAD), "system.head")
        return _wrap("system", lambda: gauss_parabolic_model(head))
    if kind == "section5-tail":
        options = {
            key: parse_number(table[key], f"system.{key}")
            for key in ("upper_constant", "upper_exponent", "lower_constant", "lower_exponent", "k_power", "log_power")
            if key in table
        }
        return _wrap("system", lambda: section5_tail_model(**options))
    raise ConfigError(f"[system] unknown kind {kind!r}")


def build_family(table: Dict[str, Any]) -> DeformationFamily:
    kind = table.get("kind")
    t_range = parse_numbers(_require(table, "t_range", "family"), "family.t_range")
    if len(t_range) != 2:
        raise ConfigError("family.t_range: expected [t_lo, t_hi]")
    t_range = (t_range[0], t_range[1])

    if kind == "similarity":
        if "ratio" in table:
            ratio = parse_polynomial(table["ratio"], "family.ratio")
            return _wrap("family", lambda: symmetric_similarity_family(ratio, t_range))
        ratios = [parse_polynomial(r, "family.ratios") for r in _require(table, "ratios", "family")]
        offsets = [parse_polynomial(o, "family.offsets") for o in _require(table, "offsets", "family")]
        return _wrap("family", lambda: similarity_family(ratios, offsets, t_range))
    if kind == "schottky-radius":
        rank = parse_int(table.get("rank", 1), "family.rank")
        radius = parse_polynomial(_require(table, "radius", "family"), "family.radius")
        return _wrap("family", lambda: schottky_radius_family(rank, radius, t_range))
    if kind == "tail-exponent":
        alpha = parse_polynomial(_require(table, "upper_exponent", "family"), "family.upper_exponent")
        beta = parse_polynomial(table.get("lower_exponent", table["upper_exponent"]), "family.lower_exponent")
        constants = {
            key: parse_number(table[key], f"family.{key}")
            for key in ("upper_constant", "lower_constant")
            if key in table
        }
        return _wrap("family", lambda: tail_exponent_family(alpha, beta, t_range, **constants))
    if kind == "moebius":
        letters = []
        for i, entry in enumerate(_require(table, "letters", "family")):
            if not isinstance(entry, list) or len(entry) != 4:
                raise ConfigError(f"family.letters[{i}]: expected four coefficient polynomials")
            letters.append([parse_polynomial(c, f"family.letters[{i}]") for c in entry])
        interval = parse_numbers(table.get("interval", [0, 1]), "family.interval")
        return _wrap("family", lambda: polynomial_family(letters, t_range, tuple(interval)))
    raise ConfigError(f"[family] unknown kind {kind!r}")
