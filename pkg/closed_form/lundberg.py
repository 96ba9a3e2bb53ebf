import math

from scipy import optimize

from stochastic_model.premium_rate import Constant
from stochastic_model.risk_model import RiskModel
from utilities.errors import ModelError, NumericalError
from utilities.logger import Logger

logger = Logger.get_logger()


def adjustment_coefficient(model: RiskModel) -> float:
    """
    Positive root beta of E e^{beta xi} * E e^{-v beta tau} = 1 for a constant
    premium v, the exponential decay rate of psi.
    """
    rate = model.rate
    if not isinstance(rate, Constant):
        raise ModelError("adjustment coefficient needs a constant premium rate")
    xi, tau = model.claims.xi, model.claims.tau
    if rate.v * tau.mean <= xi.mean:
        raise ModelError(
            f"no positive adjustment coefficient: v E tau={rate.v * tau.mean:g} <= E xi={xi.mean:g}"
        )
    abscissa = xi.mgf_abscissa()
    if abscissa <= 0:
        raise ModelError("claim sizes have no exponential moments")

    def cumulant(beta: float) -> float:
        m_xi = xi.mgf(beta)
        if math.isinf(m_xi):
            return math.inf
        return math.log(m_xi) + math.log(tau.mgf(-rate.v * beta))

    # cumulant is convex, zero at 0 and negative just to the right of 0
    low = abscissa * 1e-6 if math.isfinite(abscissa) else 1e-6
    while cumulant(low) >= 0:
        low /= 2
        if low < 1e-300:
            raise NumericalError("adjustment coefficient bracket collapsed at 0")
    if math.isfinite(abscissa):
        high = abscissa * (1 - 1e-12)
    else:
        high = 1.0
        while cumulant(high) <= 0:
            high *= 2
            if high > 1e12:
                raise NumericalError("adjustment coefficient bracket did not close")
    if cumulant(high) <= 0:
        raise ModelError("cumulant stays negative up to the abscissa; no adjustment coefficient")
    beta = optimize.brentq(cumulant, low, high, xtol=1e-14, rtol=1e-12)
    logger.info(f"Adjustment coefficient beta={beta:.8g} for v={rate.v}")
    return beta
