import numpy as np
import pytest

from embedded_chain.chain import (
    ESCAPED,
    HIT_CAP,
    HORIZON,
    RUINED,
    Caps,
    Ruined,
    Survived,
    SurvivalReason,
    jump_moment_estimates,
    sample_jump,
    sample_jumps,
    scaled_drift,
    simulate_block,
    simulate_path,
)
from embedded_chain.rng import RngStream
from stochastic_model import CriticalInverse
from utilities.errors import ModelError


def test_streams_are_reproducible_and_distinct():
    a = RngStream(7, 3).generator.random(5)
    b = RngStream(7, 3).generator.random(5)
    c = RngStream(7, 4).generator.random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_negative_seed_rejected():
    with pytest.raises(ModelError):
        RngStream(-1)


def test_jump_decomposes_into_flow_and_claim(inverse_model):
    jumps, tau, xi = sample_jumps(inverse_model, np.full(1000, 10.0), RngStream(1), return_draws=True)
    # the flow increment lies between v_c tau and v(10) tau
    increment = jumps + xi
    assert np.all(increment >= tau - 1e-12)
    assert np.all(increment <= 1.3 * tau + 1e-12)


def test_sample_jump_at_negative_level(inverse_model):
    with pytest.raises(ModelError):
        sample_jump(inverse_model, -1.0, RngStream(0))


def test_path_outcomes(inverse_model):
    path = simulate_path(inverse_model, 0.0, Caps(max_steps=10_000, level_cap=50.0), RngStream(5))
    assert path.steps == len(path.states) - 1
    if isinstance(path.outcome, Ruined):
        assert path.final_state < 0
        assert all(s >= 0 for s in path.states[:-1])
    else:
        assert path.outcome == Survived(SurvivalReason.HIT_CAP)
        assert path.final_state > 50.0


def test_path_above_cap_survives_immediately(inverse_model):
    path = simulate_path(inverse_model, 100.0, Caps(max_steps=10, level_cap=50.0), RngStream(0))
    assert path.outcome == Survived(SurvivalReason.HIT_CAP)
    assert path.steps == 0


def test_horizon_exhausted(inverse_model):
    path = simulate_path(
        inverse_model, 20.0, Caps(max_steps=1, level_cap=1e9), RngStream(2), streaming=True
    )
    assert path.states == (20.0,)

_CODES = {
    SurvivalReason.HIT_CAP: HIT_CAP,
    SurvivalReason.ESCAPED: ESCAPED,
    SurvivalReason.HORIZON_EXHAUSTED: HORIZON,
}


def _code(path):
    return RUINED if isinstance(path.outcome, Ruined) else _CODES[path.outcome.reason]


def test_block_counts_add_up(inverse_model):
    result = simulate_block(inverse_model, 2.0, 500, Caps(max_steps=2_000, level_cap=30.0), seed=9)
    assert result.ruined + result.hit_cap + result.escaped + result.horizon == 500
    assert result.escaped == 0
    assert 0 < result.ruined < 500
    assert np.all(result.final_states[result.outcome_codes == RUINED] < 0)


def test_block_is_deterministic(inverse_model):
    caps = Caps(max_steps=1_000, level_cap=20.0)
    first = simulate_block(inverse_model, 3.0, 200, caps, seed=4, first_stream=1)
    second = simulate_block(inverse_model, 3.0, 200, caps, seed=4, first_stream=1)
    np.testing.assert_array_equal(first.final_states, second.final_states)


def test_block_paths_match_scalar_runs(inverse_model):
    caps = Caps(max_steps=3_000, level_cap=25.0)
    block = simulate_block(inverse_model, 2.0, 40, caps, seed=11, first_stream=100, chunk=64)
    for j in range(40):
        path = simulate_path(inverse_model, 2.0, caps, RngStream(11, 100 + j), chunk=64)
        assert block.outcome_codes[j] == _code(path)
        assert block.steps[j] == path.steps
        assert block.final_states[j] == pytest.approx(path.final_state, rel=1e-9, abs=1e-9)


def test_block_split_keeps_every_path(inverse_model):
    caps = Caps(max_steps=2_000, level_cap=30.0)
    whole = simulate_block(inverse_model, 2.0, 30, caps, seed=3)
    head = simulate_block(inverse_model, 2.0, 12, caps, seed=3, first_stream=0)
    tail = simulate_block(inverse_model, 2.0, 18, caps, seed=3, first_stream=12)
    np.testing.assert_array_equal(
        whole.final_states, np.concatenate((head.final_states, tail.final_states))
    )
    np.testing.assert_array_equal(
        whole.outcome_codes, np.concatenate((head.outcome_codes, tail.outcome_codes))
    )


def test_draws_do_not_depend_on_caps(inverse_model):
    short = simulate_path(inverse_model, 5.0, Caps(max_steps=3, level_cap=1e9), RngStream(6))
    long = simulate_path(inverse_model, 5.0, Caps(max_steps=1_000, level_cap=1e9), RngStream(6))
    n = len(short.states)
    assert long.states[:n] == short.states


def test_escape_level_stops_paths(inverse_model):
    caps = Caps(max_steps=100_000, level_cap=1e6, escape_level=10.0)
    result = simulate_block(inverse_model, 2.0, 300, caps, seed=8)
    assert result.hit_cap == result.horizon == 0
    assert result.ruined + result.escaped == 300
    assert np.all(result.final_states[result.outcome_codes == ESCAPED] > 10.0)
    path = simulate_path(inverse_model, 12.0, caps, RngStream(0))
    assert path.outcome == Survived(SurvivalReason.ESCAPED)
    assert path.steps == 0


def test_caps_validation_and_default():
    with pytest.raises(ModelError, match="max_steps"):
        Caps(max_steps=0)
    with pytest.raises(ModelError, match="escape_level"):
        Caps(escape_level=0.0)
    assert Caps.default_for(500.0).level_cap == 50_000.0
    assert Caps.default_for(1.0).level_cap == 1e4
    assert Caps.default_for(5.0, escape_level=100.0).escape_level == 100.0


def test_jump_moments_at_large_level(inverse_model):
    # m_2(x) -> b = 2
    moments = jump_moment_estimates(inverse_model, 1000.0, 2, 400_000, RngStream(21))
    assert moments[1].value == pytest.approx(2.0, rel=0.05)
    assert abs(moments[0].value) <= 5 * moments[0].stderr + 0.01


def test_scaled_drift_tends_to_theta_mean_tau(inverse_model):
    drift = scaled_drift(inverse_model, 1000.0, 400_000, RngStream(21))
    assert drift.value == pytest.approx(3.0, rel=0.1)
    assert drift.stderr < 0.05


def test_scaled_drift_uses_critical_rate(make_exp_exp):
    # v_c = 2 needs lam / mu = 2: tau ~ Exp(2), xi ~ Exp(1), theta E tau = 1.5
    model = make_exp_exp(CriticalInverse(v_c=2.0, theta=3.0), lam=2.0, mu=1.0)
    assert scaled_drift(model, 1000.0, 400_000, RngStream(4)).value == pytest.approx(1.5, rel=0.1)


@pytest.mark.slow
def test_jump_moment_asymptotics_full_size(inverse_model):
    assert 2.7 <= scaled_drift(inverse_model, 1000.0, 10_000_000, RngStream(3)).value <= 3.3
    second = jump_moment_estimates(inverse_model, 1000.0, 2, 10_000_000, RngStream(3))[1]
    assert 1.9 <= second.value <= 2.1


def test_jump_moments_need_draws(inverse_model):
    with pytest.raises(ModelError, match="n_draws"):
        jump_moment_estimates(inverse_model, 10.0, 2, 10, RngStream(0))
