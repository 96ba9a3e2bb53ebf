from monte_carlo.estimator import (
    DecayFit,
    RuinEstimate,
    clopper_pearson,
    curve_frame,
    decay_exponent_fit,
    estimate_ruin,
    ruin_curve,
)
from monte_carlo.gamma_limit import (
    GammaLimitResult,
    PowerGrowthResult,
    gamma_limit_test,
    power_growth_test,
)
from monte_carlo.validation import compare_with_closed_form
