import math
from fractions import Fraction

import numpy as np
import pytest

from stochastic_model.claims import (
    ClaimModel,
    Deterministic,
    Exponential,
    GammaDist,
    ParetoType,
    claims_from_dict,
    distribution_from_dict,
)
from stochastic_model.premium_rate import (
    Constant,
    CriticalInverse,
    CriticalPower,
    PowerEnvelope,
    Tabulated,
    evaluate_rate,
    rate_from_dict,
    rate_inf,
    rate_sup,
)
from stochastic_model.risk_model import RiskModel, critical_rate
from utilities.errors import ModelError


@pytest.mark.parametrize(
    "z, expected",
    [(0.0, 4.0), (0.5, 4.0), (1.0, 4.0), (3.0, 2.0), (300.0, 1.01)],
)
def test_inverse_rate_is_flat_below_z_min(z, expected):
    assert evaluate_rate(CriticalInverse(v_c=1.0, theta=3.0), z) == pytest.approx(expected)


def test_evaluate_rate_vectorised():
    rate = CriticalPower(v_c=1.0, theta=2.0, alpha=0.5)
    values = evaluate_rate(rate, np.array([0.0, 4.0, 16.0]))
    np.testing.assert_allclose(values, [3.0, 2.0, 1.5])


def test_tabulated_rate_segments():
    rate = Tabulated(breakpoints=((0, 2.0), (5, 1.5)))
    assert evaluate_rate(rate, 4.9) == 2.0
    assert evaluate_rate(rate, 5.0) == 1.5
    assert rate_sup(rate) == 2.0
    assert rate_inf(rate) == 1.5


def test_rate_sup_and_inf():
    rate = CriticalInverse(v_c=1.0, theta=3.0, z_min=2.0)
    assert rate_sup(rate) == pytest.approx(2.5)
    assert rate_inf(rate) == 1.0


@pytest.mark.parametrize(
    "build, message",
    [
        (lambda: CriticalPower(v_c=1.0, theta=2.0, alpha=1.5), "alpha"),
        (lambda: CriticalInverse(v_c=1.0, theta=-1.0), "theta"),
        (lambda: CriticalInverse(v_c=0.0, theta=1.0), "v_c"),
        (lambda: Constant(v=0.0), "positive"),
        (lambda: Tabulated(breakpoints=((0, 1.0), (0, 2.0))), "increasing"),
        (lambda: PowerEnvelope(coefficient=1.0, exponent=1.0), "exponent"),
    ],
)
def test_invalid_rates_rejected(build, message):
    with pytest.raises(ModelError, match=message):
        build()


def test_rate_from_dict_kinds():
    assert rate_from_dict({"kind": "constant", "v": 2}) == Constant(v=2.0)
    rate = rate_from_dict(
        {"kind": "critical_inverse", "v_c": 1, "theta": 3, "envelope": {"coefficient": 1, "exponent": 2}}
    )
    assert rate == CriticalInverse(v_c=1.0, theta=3.0)
    assert rate.envelope_p(4.0) == pytest.approx(1 / 16)
    assert rate_from_dict({"kind": "tabulated", "breakpoints": [[0, 2], [5, 1.5]]}).breakpoints == (
        (0.0, 2.0),
        (5.0, 1.5),
    )


def test_rate_from_dict_unknown_kind():
    with pytest.raises(ModelError, match="unknown rate kind"):
        rate_from_dict({"kind": "logistic"})


def test_exact_moments():
    assert Exponential(2.0).exact_moment(3) == Fraction(3, 4)
    assert GammaDist(shape=2.0, rate=1.0).exact_moment(2) == 6
    assert ParetoType(beta=1.0).exact_moment(2) == 1
    assert ParetoType(beta=1.0).exact_moment(3) is None
    assert math.isinf(ParetoType(beta=1.0).moment(3))
    assert Deterministic(2.0).variance == 0


def test_pareto_tail_and_sampler_agree():
    dist = ParetoType(beta=1.0)
    assert dist.tail(9.0) == pytest.approx(1e-3)
    draws = dist.sample(np.random.default_rng(3), 200_000)
    assert np.mean(draws > 1.0) == pytest.approx(float(dist.tail(1.0)), abs=0.005)


def test_distribution_from_dict_errors():
    with pytest.raises(ModelError, match="unknown distribution family"):
        distribution_from_dict({"family": "weibull"})
    with pytest.raises(ModelError, match="invalid parameters"):
        distribution_from_dict({"family": "exponential", "shape": 1})
    with pytest.raises(ModelError, match="missing"):
        claims_from_dict({"xi": {"family": "exponential", "rate": 1}})


def test_derived_constants_inverse(inverse_model):
    constants = inverse_model.derived_constants()
    assert constants.v_c == 1.0
    assert constants.b == 2.0
    assert constants.threshold == 1.0
    assert constants.rho == 2.0
    assert constants.mu_drift == 3.0
    assert constants.r_1 == 3.0
    assert constants.v_bar == 4.0
    assert constants.is_transient


def test_derived_constants_heavy(heavy_model):
    constants = heavy_model.derived_constants()
    assert constants.v_c == pytest.approx(0.5)
    assert constants.b == pytest.approx(1.0)
    assert constants.rho == pytest.approx(3.0)


def test_power_rate_has_no_rho(power_model):
    constants = power_model.derived_constants()
    assert constants.rho is None
    assert constants.r_1 == pytest.approx(2.0)


def test_critical_rate_of_deterministic_claims():
    claims = ClaimModel(xi=Deterministic(1.0), tau=Exponential(1.0))
    assert critical_rate(claims) == 1.0


def test_model_from_dict():
    model = RiskModel.from_dict(
        {
            "rate": {"kind": "critical_inverse", "v_c": 1, "theta": 3},
            "claims": {
                "xi": {"family": "exponential", "rate": 1},
                "tau": {"family": "exponential", "rate": 1},
            },
        }
    )
    assert model.theta == 3.0
    assert model.v_bar == 4.0
    with pytest.raises(ModelError, match="missing"):
        RiskModel.from_dict({"rate": {"kind": "constant", "v": 1}})
