"""
Limit-set dimension toolkit
Hausdorff dimension of limit sets of conformal IFS and Fuchsian groups via
pressure, the Bowen equation and transfer operators.
"""

__version__ = "0.3.0"

from .errors import LimitDimensionError, ConfigError
from .results import DimensionResult, PressureEstimate, PressureMethod
from .moebius import (
    MoebiusMap,
    Circle,
    compose,
    apply,
    derivative_modulus,
    classify,
    reflect,
    cayley_to_disk,
)
from .group import (
    GroupPresentation,
    OrbitBall,
    enumerate_orbit,
    poincare_partial_sum,
    critical_exponent_estimate,
    convergence_type_probe,
    build_section5_group,
    symmetric_schottky,
    cyclic_hyperbolic,
    reflection_group,
)
from .ifs import (
    IfsSystem,
    TailLaw,
    ifs_from_schottky,
    cylinder_map,
    derivative_norm,
    psi_n,
    theta_number,
    limit_set_sample,
    limit_set_cylinders,
    CylinderSample,
    box_dimension_estimate,
    similarity_system,
    continued_fraction_system,
    gauss_parabolic_model,
    section5_tail_model,
)
from .pressure import pressure_direct, transfer_eigenvalue, bowen_dimension, regularity_check, Regularity
from .deform import (
    DeformationFamily,
    DimensionCurve,
    family_eval,
    dimension_curve,
    analyticity_diagnostic,
)
from .config import ExperimentConfig, load_config, parse_config
from .run_archive import RunArchive
from .performance import profile_call, time_pressure_methods, recommend_collocation_size

# Async support (aiofiles optional - falls back to executor writes)
try:
    from .async_runner import AsyncCurveRunner, async_dimension_curve
    _has_async = True
except ImportError:
    _has_async = False
    AsyncCurveRunner = None
    async_dimension_curve = None

__all__ = [
    # Errors and results
    'LimitDimensionError',
    'ConfigError',
    'DimensionResult',
    'PressureEstimate',
    'PressureMethod',
    # Möbius geometry
    'MoebiusMap',
    'Circle',
    'compose',
    'apply',
    'derivative_modulus',
    'classify',
    'reflect',
    'cayley_to_disk',
    # Groups
    'GroupPresentation',
    'OrbitBall',
    'enumerate_orbit',
    'poincare_partial_sum',
    'critical_exponent_estimate',
    'convergence_type_probe',
    'build_section5_group',
    'symmetric_schottky',
    'cyclic_hyperbolic',
    'reflection_group',
    # IFS
    'IfsSystem',
    'TailLaw',
    'ifs_from_schottky',
    'cylinder_map',
    'derivative_norm',
    'psi_n',
    'theta_number',
    'limit_set_sample',
    'limit_set_cylinders',
    'CylinderSample',
    'box_dimension_estimate',
    'similarity_system',
    'continued_fraction_system',
    'gauss_parabolic_model',
    'section5_tail_model',
    # Pressure
    'pressure_direct',
    'transfer_eigenvalue',
    'bowen_dimension',
    'regularity_check',
    'Regularity',
    # Deformations
    'DeformationFamily',
    'DimensionCurve',
    'family_eval',
    'dimension_curve',
    'analyticity_diagnostic',
    # Config and runs
    'ExperimentConfig',
    'load_config',
    'parse_config',
    'RunArchive',
    # Performance
    'profile_call',
    'time_pressure_methods',
    'recommend_collocation_size',
    # Async
    'AsyncCurveRunner',
    'async_dimension_curve',
]
