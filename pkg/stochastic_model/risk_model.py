from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

from stochastic_model.claims import ClaimModel, claims_from_dict, claims_to_dict
from stochastic_model.premium_rate import (
    CriticalInverse,
    CriticalPower,
    PremiumRateSpec,
    is_critical,
    rate_from_dict,
    rate_sup,
    rate_to_dict,
)
from utilities.errors import ModelError
from utilities.logger import Logger

logger = Logger.get_logger()


def critical_rate(claims: ClaimModel) -> float:
    """v_c = E xi / E tau, the rate at which premiums exactly balance claims."""
    mean_xi = claims.xi.mean
    if math.isinf(mean_xi):
        logger.error("Claim size has infinite mean")
        raise ModelError("heavy mean claim: E xi is infinite")
    return float(claims.xi.exact_moment(1) / claims.tau.exact_moment(1))


@dataclass(frozen=True)
class DerivedConstants:
    v_c: float
    v_bar: float
    b: float
    mu_drift: Optional[float]
    rho: Optional[float]
    threshold: float
    r_1: Optional[float]

    @property
    def is_transient(self) -> bool:
        return self.rho is not None and self.rho > 0


@dataclass(frozen=True)
class RiskModel:
    rate: PremiumRateSpec
    claims: ClaimModel

    def __post_init__(self):
        v_c = critical_rate(self.claims)
        if is_critical(self.rate) and not math.isclose(self.rate.v_c, v_c, rel_tol=1e-9):
            logger.warning(
                f"Premium rate v_c={self.rate.v_c} differs from E xi / E tau={v_c}; "
                "the zero-drift asymptotics assume they agree"
            )
        if self.claims.xi.is_bounded:
            logger.warning(
                "Claim sizes are bounded: ruin probability may vanish for large reserves"
            )

    @property
    def v_c(self) -> float:
        return critical_rate(self.claims)

    @property
    def v_bar(self) -> float:
        return rate_sup(self.rate)

    @property
    def theta(self) -> Optional[float]:
        return self.rate.theta if is_critical(self.rate) else None

    def derived_constants(self) -> DerivedConstants:
        return derived_constants(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RiskModel":
        try:
            return cls(rate=rate_from_dict(data["rate"]), claims=claims_from_dict(data["claims"]))
        except KeyError as e:
            raise ModelError(f"model section is missing {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return {"rate": rate_to_dict(self.rate), "claims": claims_to_dict(self.claims)}


def derived_constants(model: RiskModel) -> DerivedConstants:
    """Constants shared by every limit theorem: v_c, b, mu, rho and the recurrence threshold."""
    claims = model.claims
    infinite = [
        name for name, dist in (("xi", claims.xi), ("tau", claims.tau)) if math.isinf(dist.moment(2))
    ]
    if infinite:
        logger.error(f"Infinite second moments: {infinite}")
        raise ModelError(f"infinite second moment of {', '.join(infinite)}")

    xi, tau = claims.xi, claims.tau
    v_c = critical_rate(claims)
    mean_tau = tau.exact_moment(1)
    var_xi = xi.exact_moment(2) - xi.exact_moment(1) ** 2
    var_tau = tau.exact_moment(2) - mean_tau**2
    b = var_xi + (xi.exact_moment(1) / mean_tau) ** 2 * var_tau
    threshold = b / (2 * mean_tau)

    mu_drift = rho = r_1 = None
    if isinstance(model.rate, (CriticalInverse, CriticalPower)):
        theta = model.rate.theta
        mu_drift = theta * float(mean_tau)
        if b > 0:
            r_1 = 2 * mu_drift / float(b)
            if isinstance(model.rate, CriticalInverse):
                rho = r_1 - 1
    return DerivedConstants(
        v_c=v_c,
        v_bar=model.v_bar,
        b=float(b),
        mu_drift=mu_drift,
        rho=rho,
        threshold=float(threshold),
        r_1=r_1,
    )
