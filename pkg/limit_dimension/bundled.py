"""
Example experiment configs shipped with the package.

Addressed from the command line as ``--config bundled:<name>``.
"""
from typing import List

from .errors import ConfigError


BUNDLED_CONFIGS = {
    "middle-thirds": """\
# Cantor middle-thirds set; dimension log 2 / log 3
schema_version = 1
experiment = "dim"

[system]
kind = "similarity"
ratios = ["1/3", "1/3"]
offsets = [0, "2/3"]

[parameters]
method = "transfer-spectral"
size = 16
tolerance = 1e-12

[output]
prefix = "middle-thirds"
""",
    "moran-pair": """\
schema_version = 1
experiment = "dim"

[system]
kind = "similarity"
ratios = [0.2, 0.45]
offsets = [0, 0.55]

[parameters]
tolerance = 1e-12

[output]
prefix = "moran-pair"
""",
    "continued-fraction-12": """\
# Continued fractions with partial quotients in {1, 2}
schema_version = 1
experiment = "dim"

[system]
kind = "continued-fraction"
digits = [1, 2]

[parameters]
method = "transfer-spectral"
size = 32
tolerance = 1e-10

[output]
prefix = "continued-fraction-12"
""",
    "schottky-symmetric": """\
schema_version = 1
experiment = "orbit"

[system]
kind = "schottky"
rank = 2
radius = 0.3

[parameters]
max_len = 7

[output]
prefix = "schottky-symmetric"
""",
    "reflection-three": """\
# Three reflections in circles orthogonal to the unit circle
schema_version = 1
experiment = "probe-type"

[system]
kind = "reflection"
count = 3
radius = 0.5

[parameters]
max_len = 10

[output]
prefix = "reflection-three"
""",
    "cyclic-hyperbolic": """\
schema_version = 1
experiment = "orbit"

[system]
kind = "cyclic"
multiplier = 4

[parameters]
max_len = 20

[output]
prefix = "cyclic-hyperbolic"
""",
    "gauss-parabolic-tail": """\
# All Gauss branches 1/(k+x); the tail beyond head is an envelope
schema_version = 1
experiment = "dim"

[system]
kind = "gauss-tail"
head = 20

[parameters]
method = "transfer-spectral"
size = 16

[output]
prefix = "gauss-parabolic-tail"
""",
    "section5-tail": """\
schema_version = 1
experiment = "pressure-curve"

[system]
kind = "section5-tail"
upper_constant = 0.05
upper_exponent = 1.0
lower_constant = 0.05
lower_exponent = 1.0

[parameters]
sigma_lo = 0.55
sigma_hi = 1.5
sigma_count = 20

[output]
prefix = "section5-tail"
""",
    "section5-depth5": """\
schema_version = 1
experiment = "section5"

[system]
kind = "section5"
depth = 5
convention = "tangent"

[output]
prefix = "section5-depth5"
""",
    "similarity-family": """\
# r(t) = 1/3 + t/10; dim(t) = log 2 / log(1/r(t))
schema_version = 1
experiment = "dimension-curve"

[family]
kind = "similarity"
t_range = [-0.5, 0.5]
ratio = ["1/3", "1/10"]

[parameters]
m = 24
tolerance = 1e-12

[output]
prefix = "similarity-family"
""",
    "schottky-radius-family": """\
schema_version = 1
experiment = "dimension-curve"

[family]
kind = "schottky-radius"
t_range = [-1, 1]
rank = 2
radius = [0.3, 0.1]

[parameters]
m = 16

[output]
prefix = "schottky-radius-family"
""",
    "tail-exponent-family": """\
# alpha(t) = beta(t) = 0.8 + 0.1 t for the double-index tail
schema_version = 1
experiment = "dimension-curve"

[family]
kind = "tail-exponent"
t_range = [-1, 1]
upper_exponent = [0.8, 0.1]
lower_exponent = [0.8, 0.1]

[parameters]
m = 16

[output]
prefix = "tail-exponent-family"
""",
    "malformed-two-systems": """\
# Rejected: a config defines exactly one system or family
schema_version = 1
experiment = "dim"

[system]
kind = "similarity"
ratios = [0.5, 0.25]
offsets = [0, 0.75]

[family]
kind = "similarity"
t_range = [0, 1]
ratio = [0.3]
""",
}


def list_bundled_configs() -> List[str]:
    return sorted(BUNDLED_CONFIGS)


def get_bundled_config(name: str) -> str:
    """TOML text of a bundled config"""
    try:
        return BUNDLED_CONFIGS[name]
    except KeyError:
        known = ", ".join(list_bundled_configs())
        raise ConfigError(f"unknown bundled config {name!r} (known: {known})") from None
