from closed_form.exp_exp import (
    AsymptoticShape,
    ExpExpParams,
    anchored_psi,
    asymptotic_shape,
    integrand_value,
    log_unnormalized_psi,
    psi_ratio,
    tail_bracket,
    unnormalized_psi,
)
from closed_form.lundberg import adjustment_coefficient
