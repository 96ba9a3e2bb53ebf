import enum
import math
from dataclasses import dataclass
from typing import Optional

from stochastic_model.premium_rate import CriticalInverse, CriticalPower
from stochastic_model.risk_model import RiskModel
from utilities.logger import Logger

logger = Logger.get_logger()


class ChainClass(enum.Enum):
    TRANSIENT = "Transient"
    RECURRENT = "Recurrent"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Classification:
    verdict: ChainClass
    theta: Optional[float]
    threshold: float
    rho: Optional[float]

    def __str__(self) -> str:
        if self.theta is None:
            return f"{self.verdict.value} (non-critical premium rate)"
        relation = {
            ChainClass.TRANSIENT: ">",
            ChainClass.RECURRENT: "<",
            ChainClass.INCONCLUSIVE: "=",
        }[self.verdict]
        text = f"{self.verdict.value} (theta={self.theta:g} {relation} threshold={self.threshold:g}"
        if self.rho is not None:
            text += f", rho={self.rho:g}"
        return text + ")"


def classify(model: RiskModel) -> Classification:
    """
    theta against b / (2 E tau) for v_c + theta / z. Rates v_c + theta / z^alpha with
    alpha < 1 always escape; constant and tabulated rates are not decided here.
    """
    constants = model.derived_constants()
    rate = model.rate
    if isinstance(rate, CriticalInverse):
        if math.isclose(rate.theta, constants.threshold, rel_tol=1e-12):
            verdict = ChainClass.INCONCLUSIVE
        elif rate.theta > constants.threshold:
            verdict = ChainClass.TRANSIENT
        else:
            verdict = ChainClass.RECURRENT
        result = Classification(verdict, rate.theta, constants.threshold, constants.rho)
    elif isinstance(rate, CriticalPower) and rate.theta > 0:
        result = Classification(ChainClass.TRANSIENT, rate.theta, 0.0, None)
    else:
        result = Classification(ChainClass.INCONCLUSIVE, None, constants.threshold, None)
    logger.info(f"Classified: {result}")
    return result
