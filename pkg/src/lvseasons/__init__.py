"""Three-species Lotka-Volterra competition with seasonal succession.

Period map, boundary fixed points, permanence classification and long-run
orbit analysis.
"""

from .classify import (
    IMPERMANENT,
    INDETERMINATE,
    PERMANENT,
    BoundaryPortrait,
    PermanenceVerdict,
    average_lyapunov_test,
    boundary_portrait,
    classify_permanence,
    extinction_check,
)
from .flow import (
    IntegratorConfig,
    lv_flow,
    linear_phase_map,
    seasonal_flow,
    time_series,
    variational_flow,
)
from .orbit import AttractorReport, OrbitRecord, attractor_detect, iterate_orbit, rotation_number_estimate
from .params import (
    DerivedQuantities,
    InvalidParameters,
    SeasonalParams,
    derive,
    example_params,
    validate_params,
)
from .poincare import (
    FixedPointRecord,
    axial_fixed_point,
    interior_fixed_points,
    planar_fixed_points,
    poincare_jacobian,
    poincare_map,
    theta_hat,
    transversal_multiplier,
)

__version__ = "0.1.0"
