import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from embedded_chain.chain import Caps
from lyapunov_bounds.classify import ChainClass, classify
from lyapunov_bounds.drift import DRIFT_COLUMNS, bound_envelope, calibrate_delta, drift_check
from lyapunov_bounds.power_case import (
    a_coefficients,
    gamma_index,
    leading_stretch,
    power_case_for,
)
from lyapunov_bounds.profile import (
    build_profile,
    inverse_profile,
    power_case_shape,
    profile_table,
    u_increment,
)
from stochastic_model.claims import ClaimModel, Exponential, ParetoType
from stochastic_model.premium_rate import Constant, CriticalPower
from stochastic_model.risk_model import RiskModel
from utilities.errors import ModelError


@pytest.fixture(scope="module")
def rho_two():
    return inverse_profile(2.0)


def test_inverse_profile_closed_forms(rho_two):
    assert rho_two.q(0.5) == 3.0
    assert rho_two.q(2.0) == 1.5
    assert rho_two.Q(2.0) == pytest.approx(5.0794, abs=1e-4)
    assert rho_two.U(4.0) == pytest.approx(1.5559e-3, rel=1e-4)
    assert rho_two.C_p == pytest.approx(3.0)
    assert rho_two.crossings == ()


def test_closed_form_U_matches_quadrature(rho_two):
    for x in (0.3, 1.0, 7.0):
        assert rho_two.U(x) == pytest.approx(rho_two._tail_integral("none", x), rel=1e-9)


def test_envelope(rho_two):
    assert rho_two.p(0.5) == 1.0
    assert rho_two.p(4.0) == pytest.approx(0.125)
    assert rho_two.P(4.0) == pytest.approx(1.0 + 2.0 * (1.0 - 0.5))
    assert float(rho_two.P(1e12)) == pytest.approx(rho_two.C_p, rel=1e-5)


def test_perturbed_functions_sandwich(rho_two):
    xs = np.geomspace(1e-2, 1e4, 1000)
    Q = rho_two.Q(xs)
    assert np.all(rho_two.Q_minus(xs) <= Q)
    assert np.all(Q <= rho_two.Q_plus(xs))
    U = rho_two.U(xs)
    # quad tolerance on the tails
    assert np.all(rho_two.U_plus(xs) <= U * (1 + 1e-9))
    assert np.all(U <= rho_two.U_minus(xs) * (1 + 1e-9))
    assert np.all(rho_two.q_minus(xs) >= 0)


@pytest.mark.parametrize("which", ["plus", "minus"])
@pytest.mark.parametrize("x", [0.5, 4.0, 30.0])
def test_tail_integral_derivative(rho_two, which, x):
    h = 1e-5 * x
    U = rho_two.U_plus if which == "plus" else rho_two.U_minus
    Q = rho_two.Q_plus if which == "plus" else rho_two.Q_minus
    slope = (U(x + h) - U(x - h)) / (2 * h)
    assert -slope == pytest.approx(math.exp(-Q(x)), rel=1e-4)


def test_u_increment_matches_tail_integrals(rho_two):
    targets = np.array([-2.0, 0.5, 3.0, 12.0, 40.0])
    increments = u_increment(rho_two, "minus", 10.0, targets)
    expected = [rho_two.U_minus(max(t, 0.0)) - rho_two.U_minus(10.0) for t in targets]
    np.testing.assert_allclose(increments, expected, rtol=1e-7)
    assert increments[0] > 0 > increments[-1]


def test_inverse_profile_rejects_recurrent():
    with pytest.raises(ModelError, match="recurrent or critical"):
        inverse_profile(0.0)


def test_build_profile_dispatch(inverse_model, power_model):
    assert build_profile(inverse_model).rho == pytest.approx(2.0)
    assert build_profile(power_model).power_case is not None


def test_profile_table(rho_two):
    table = profile_table(rho_two, [1.0, 2.0, 4.0])
    assert list(table.columns) == ["x", "q", "Q", "U", "U_plus", "U_minus"]
    assert table["U"].is_monotonic_decreasing


# ---- power family


def test_gamma_index():
    assert gamma_index(0.5) == 3
    assert gamma_index(0.4) == 3
    assert gamma_index(0.9) == 2
    with pytest.raises(ModelError, match="alpha"):
        gamma_index(1.0)


def test_a_coefficients(power_model):
    a = a_coefficients(power_model, 2.0, 3)
    assert a[(1, 0)] == 0
    assert a[(1, 1)] == 2
    assert a[(2, 0)] == 2
    assert all(isinstance(value, Fraction) for value in a.values())


def test_power_case_series(power_model):
    case = power_case_for(power_model)
    assert case.gamma == 3
    assert case.r_exact == (Fraction(2), Fraction(-4))
    assert case.r == (2.0, -4.0)
    assert case.b_shift == 32
    assert case.log_corrected
    assert all(abs(value) <= 1e-10 for value in case.residuals)
    assert leading_stretch(case) == pytest.approx(4.0)


def test_power_q_is_decreasing(power_model):
    profile = build_profile(power_model)
    xs = np.geomspace(0.1, 1e6, 200)
    q = profile.q(xs)
    assert np.all(q > 0)
    assert np.all(np.diff(q) <= 0)
    np.testing.assert_allclose(
        profile.Q(xs[1:]) - profile.Q(xs[:-1]),
        [_integrate_q(profile, a, b) for a, b in zip(xs[:-1], xs[1:])],
        rtol=1e-6,
    )


def _integrate_q(profile, a, b):
    return integrate.quad(profile.q, a, b, epsabs=0.0, epsrel=1e-12)[0]


def test_power_case_not_log_corrected(make_exp_exp):
    model = make_exp_exp(CriticalPower(v_c=1.0, theta=1.0, alpha=0.4))
    case = power_case_for(model)
    assert not case.log_corrected
    assert case.r[0] == pytest.approx(1.0)


def test_power_case_needs_finite_moments():
    model = RiskModel(
        rate=CriticalPower(v_c=0.5, theta=1.0, alpha=0.5),
        claims=ClaimModel(xi=ParetoType(beta=1.0), tau=Exponential(1.0)),
    )
    with pytest.raises(ModelError, match="moment of order 3 of xi is infinite"):
        power_case_for(model)


def test_power_case_shape(power_model, rho_two):
    profile = build_profile(power_model)
    x = np.array([4.0, 100.0])
    # x^{1/2} exp(-4 x^{1/2}) x^{4}
    np.testing.assert_allclose(power_case_shape(profile, x), x**4.5 * np.exp(-4.0 * np.sqrt(x)), rtol=1e-12)
    with pytest.raises(ModelError, match="no power case"):
        power_case_shape(rho_two, 1.0)


# ---- classification


@pytest.mark.parametrize(
    "theta, verdict, text",
    [
        (3.0, ChainClass.TRANSIENT, "Transient (theta=3 > threshold=1, rho=2)"),
        (0.5, ChainClass.RECURRENT, "Recurrent (theta=0.5 < threshold=1, rho=-0.5)"),
        (1.0, ChainClass.INCONCLUSIVE, "Inconclusive (theta=1 = threshold=1, rho=0)"),
    ],
)
def test_classify_inverse(inverse_model_factory, theta, verdict, text):
    result = classify(inverse_model_factory(theta))
    assert result.verdict is verdict
    assert str(result) == text


def test_classify_other_rates(power_model, constant_model):
    assert classify(power_model).verdict is ChainClass.TRANSIENT
    result = classify(constant_model)
    assert result.verdict is ChainClass.INCONCLUSIVE
    assert str(result) == "Inconclusive (non-critical premium rate)"


# ---- drift and envelopes


def test_supercritical_constant_rate_contracts(make_exp_exp):
    model = make_exp_exp(Constant(v=3.0))
    report = drift_check(inverse_profile(0.2), model, [5.0, 10.0, 20.0, 40.0], 10_000, seed=1, threads=1)
    assert list(report.table.columns) == DRIFT_COLUMNS
    assert np.all(report.table["drift_minus"] < -3 * report.table["se_minus"])


def test_drift_check_inverse_model(inverse_model, rho_two):
    report = drift_check(rho_two, inverse_model, [40.0, 20.0], 10_000, seed=2, threads=1)
    assert report.table["x"].tolist() == [20.0, 40.0]
    assert np.all(np.isfinite(report.table["ratio_minus"]))
    if report.x_hat is not None:
        assert report.profile.x_hat == report.x_hat
        assert report.table["signs_not_rejected"].iloc[-1]
    assert (report.table["signs_significant"] <= report.table["signs_not_rejected"]).all()


def test_drift_check_is_thread_independent(inverse_model, rho_two):
    one = drift_check(rho_two, inverse_model, [10.0], 10_000, seed=5, threads=1)
    two = drift_check(rho_two, inverse_model, [10.0], 10_000, seed=5, threads=2)
    assert one.table.equals(two.table)


def test_drift_check_validation(inverse_model, rho_two):
    with pytest.raises(ModelError, match="n_draws"):
        drift_check(rho_two, inverse_model, [10.0], 100)
    with pytest.raises(ModelError, match="positive levels"):
        drift_check(rho_two, inverse_model, [0.0, 10.0], 10_000)


@pytest.mark.slow
def test_drift_signs_full_size(inverse_model, rho_two):
    report = drift_check(rho_two, inverse_model, [5.0, 10.0, 20.0, 40.0, 80.0], 1_000_000, seed=0)
    assert report.x_hat is not None
    assert report.x_hat <= 40.0


def test_bound_envelope(inverse_model, rho_two):
    profile = rho_two.with_x_hat(20.0)
    envelope = bound_envelope(profile, inverse_model, 100.0, delta=0.5)
    assert 0.03 <= envelope.upper <= 0.07
    assert envelope.lower == pytest.approx(0.5 * envelope.lower_shape)
    assert envelope.lower < envelope.upper
    near = bound_envelope(profile, inverse_model, 20.0 + 1e-6)
    assert near.upper == pytest.approx(1.0, rel=1e-5)
    assert near.lower is None


def test_bound_envelope_errors(inverse_model, rho_two):
    with pytest.raises(ModelError, match="x_hat is unset"):
        bound_envelope(rho_two, inverse_model, 100.0)
    profile = rho_two.with_x_hat(20.0)
    with pytest.raises(ModelError, match="must exceed x_hat"):
        bound_envelope(profile, inverse_model, 20.0)
    with pytest.raises(ModelError, match="does not belong"):
        bound_envelope(inverse_profile(1.0).with_x_hat(20.0), inverse_model, 100.0)
    with pytest.raises(ModelError, match="delta"):
        bound_envelope(profile, inverse_model, 100.0, delta=1.5)


def test_calibrate_delta(inverse_model, rho_two):
    with pytest.raises(ModelError, match="x_hat is unset"):
        calibrate_delta(rho_two, inverse_model, 100)
    delta = calibrate_delta(
        rho_two.with_x_hat(4.0), inverse_model, 2000, caps=Caps(max_steps=20_000, level_cap=200.0), seed=3, threads=1
    )
    assert 0 < delta < 1
