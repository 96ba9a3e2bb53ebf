import math
from typing import Tuple, Union

from scipy import integrate

import config
from stochastic_model.claims import (
    ClaimModel,
    Deterministic,
    Distribution,
    Exponential,
    ParetoType,
)
from stochastic_model.risk_model import RiskModel
from utilities.errors import ModelError
from utilities.logger import Logger

logger = Logger.get_logger()


def karamata_integral(claims: Union[ClaimModel, Distribution], x: float) -> float:
    """int_x^inf y P{xi > y} dy; about x^2 P{xi > x} / beta for regularly varying tails."""
    xi = claims.xi if isinstance(claims, ClaimModel) else claims
    if x < 0:
        raise ModelError(f"x must be >= 0, got {x}")
    if isinstance(xi, ParetoType):
        a, s = xi.tail_index, xi.scale
        if a <= 2:
            raise ModelError(f"tail not integrable against y: beta={xi.beta} <= 0")
        u = 1.0 + x / s
        return s**2 * (u ** (2 - a) / (a - 2) - u ** (1 - a) / (a - 1))
    if isinstance(xi, Exponential):
        lam = xi.rate
        return math.exp(-lam * x) * (x / lam + 1.0 / lam**2)
    if isinstance(xi, Deterministic):
        return max(xi.value**2 - x**2, 0.0) / 2.0
    value, _ = integrate.quad(
        lambda y: y * float(xi.tail(y)),
        x,
        math.inf,
        epsabs=0.0,
        epsrel=config.QUAD_REL_TOL,
        limit=config.QUAD_LIMIT,
    )
    return value


def x2_tail(claims: Union[ClaimModel, Distribution], x: float) -> float:
    xi = claims.xi if isinstance(claims, ClaimModel) else claims
    return x**2 * float(xi.tail(x))


def heavy_regime(model: RiskModel) -> Tuple[float, float]:
    """(beta, rho) of a model with Pareto-type claims and beta < rho."""
    xi = model.claims.xi
    if not isinstance(xi, ParetoType):
        raise ModelError("heavy-tail tools need Pareto-type claim sizes")
    rho = model.derived_constants().rho
    if rho is None:
        raise ModelError("heavy-tail tools need a critical_inverse premium rate")
    if xi.beta >= rho:
        logger.error(f"beta={xi.beta} >= rho={rho}")
        raise ModelError("light-tail regime: use lyapunov_bounds")
    return xi.beta, rho
