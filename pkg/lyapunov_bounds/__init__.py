from lyapunov_bounds.classify import ChainClass, Classification, classify
from lyapunov_bounds.drift import (
    BoundEnvelope,
    DriftReport,
    bound_envelope,
    calibrate_delta,
    drift_check,
)
from lyapunov_bounds.power_case import (
    PowerCase,
    a_coefficients,
    gamma_index,
    leading_stretch,
    power_case_for,
    r_coefficients,
    shape_value,
)
from lyapunov_bounds.profile import (
    LyapunovProfile,
    build_profile,
    build_profile_inverse,
    build_profile_power,
    inverse_profile,
    power_case_shape,
    profile_table,
    u_increment,
)
