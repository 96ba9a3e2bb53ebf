import pytest

from stochastic_model.claims import ClaimModel, Exponential, ParetoType
from stochastic_model.premium_rate import Constant, CriticalInverse, CriticalPower
from stochastic_model.risk_model import RiskModel


def exp_exp(rate, lam=1.0, mu=1.0) -> RiskModel:
    return RiskModel(rate=rate, claims=ClaimModel(xi=Exponential(mu), tau=Exponential(lam)))


@pytest.fixture
def inverse_model():
    """lam = mu = 1, v(z) = 1 + 3 / max(z, 1): rho = 2."""
    return exp_exp(CriticalInverse(v_c=1.0, theta=3.0))


@pytest.fixture
def inverse_model_factory():
    def build(theta):
        return exp_exp(CriticalInverse(v_c=1.0, theta=theta))

    return build


@pytest.fixture
def power_model():
    """lam = mu = 1, v(z) = 1 + 2 / max(z, 1)^(1/2)."""
    return exp_exp(CriticalPower(v_c=1.0, theta=2.0, alpha=0.5))


@pytest.fixture
def constant_model():
    """Classical supercritical model: v = 2 against E xi / E tau = 1."""
    return exp_exp(Constant(v=2.0))


@pytest.fixture
def heavy_model():
    """Exponential tau, Pareto tail (1 + y)^-3, theta = 2: v_c = 1/2, b = 1, rho = 3."""
    return RiskModel(
        rate=CriticalInverse(v_c=0.5, theta=2.0),
        claims=ClaimModel(xi=ParetoType(beta=1.0), tau=Exponential(1.0)),
    )


@pytest.fixture
def make_exp_exp():
    return exp_exp
