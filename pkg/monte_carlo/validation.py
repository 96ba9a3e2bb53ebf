import math
from typing import Optional, Sequence

import pandas as pd

from closed_form.exp_exp import ExpExpParams, psi_ratio
from embedded_chain.chain import Caps
from monte_carlo.estimator import ruin_curve
from stochastic_model.risk_model import RiskModel
from utilities.errors import NumericalError
from utilities.logger import Logger

logger = Logger.get_logger()


def compare_with_closed_form(
    model: RiskModel,
    xs: Sequence[float],
    n_paths: int,
    caps: Optional[Caps] = None,
    seed: int = 0,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """
    MC ratios p_hat(x) / p_hat(xs[0]) next to the exact exponential-claims ratio,
    with delta-method z-scores.
    """
    params = ExpExpParams.from_model(model)
    curve = ruin_curve(model, xs, n_paths, caps=caps, seed=seed, threads=threads)
    reference = curve[0]
    if reference.p_hat == 0:
        raise NumericalError(f"no ruin observed at reference level x={reference.x}")

    rows = []
    for estimate in curve:
        mc_ratio = estimate.p_hat / reference.p_hat
        exact = psi_ratio(params, estimate.x, reference.x)
        if estimate is reference:
            z_score = 0.0
        else:
            # zero counts are floored at one event so the z-score stays finite
            p_x = max(estimate.p_hat, 1.0 / estimate.n_paths)
            rel_var = (max(estimate.stderr, 1.0 / estimate.n_paths) / p_x) ** 2
            rel_var += (reference.stderr / reference.p_hat) ** 2
            se = (p_x / reference.p_hat) * math.sqrt(rel_var)
            z_score = (mc_ratio - exact) / se
        rows.append(
            {"x": estimate.x, "mc_ratio": mc_ratio, "closed_form_ratio": exact, "z_score": z_score}
        )
        logger.info(f"x={estimate.x}: mc={mc_ratio:.5g} exact={exact:.5g} z={z_score:.2f}")
    return pd.DataFrame(rows, columns=["x", "mc_ratio", "closed_form_ratio", "z_score"])
