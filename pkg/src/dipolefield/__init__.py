"""Field statistics inside a random uniform distribution of dipoles.

Two independent computation paths for the probability distribution of the
field component at a probe point: direct Monte Carlo simulation of finite
dipole ensembles, and analytic characteristic-function inversion of the
infinite-ensemble limit (shifted Lorentzian and its excluded-volume family),
plus machinery to cross-validate the two.
"""

from .errors import NumericalError
from .kernels import (
    OrientationMode,
    angular_factor_parallel,
    angular_factor_random,
    field_scale,
    physical_field,
    reduced_field_contribution,
)
from .analytic import (
    D_INF_PARALLEL,
    D_INF_RANDOM,
    GeometryFactor,
    charfn_single,
    d_infinity,
    geometry_factor,
    geometry_factor_parallel,
    geometry_factor_random,
    geometry_factor_random_quadrature,
    geometry_factor_step,
    limit_center,
    shift_constant,
    shift_constant_parallel_closed_form,
    single_dipole_density,
)
from .limits import (
    DistributionCurve,
    charfn_excluded,
    charfn_limit,
    default_grid,
    excluded_volume_curve,
    gaussian_asymptote,
    invert_charfn,
    lorentzian_limit,
)
from .montecarlo import (
    ComparisonReport,
    FieldHistogram,
    SimulationSpec,
    compare,
    run_simulation,
    sample_realization,
)

__version__ = "0.1.0"

__all__ = [
    "NumericalError",
    "OrientationMode",
    "angular_factor_parallel",
    "angular_factor_random",
    "reduced_field_contribution",
    "physical_field",
    "field_scale",
    "D_INF_PARALLEL",
    "D_INF_RANDOM",
    "GeometryFactor",
    "d_infinity",
    "geometry_factor",
    "geometry_factor_parallel",
    "geometry_factor_step",
    "geometry_factor_random",
    "geometry_factor_random_quadrature",
    "single_dipole_density",
    "charfn_single",
    "shift_constant",
    "shift_constant_parallel_closed_form",
    "limit_center",
    "DistributionCurve",
    "default_grid",
    "lorentzian_limit",
    "charfn_limit",
    "charfn_excluded",
    "invert_charfn",
    "gaussian_asymptote",
    "excluded_volume_curve",
    "SimulationSpec",
    "FieldHistogram",
    "ComparisonReport",
    "sample_realization",
    "run_simulation",
    "compare",
]
