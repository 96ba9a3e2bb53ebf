from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

import config
from embedded_chain.rng import RngStream
from reserve_flow.flow import FlowSolver, flow
from stochastic_model.risk_model import RiskModel
from utilities.errors import ModelError
from utilities.logger import Logger

logger = Logger.get_logger()


@dataclass(frozen=True)
class Caps:
    """
    Censoring limits of a simulated path. escape_level, when set, stops a path
    as soon as it climbs above that level; it is counted with the cap survivors.
    """

    max_steps: int = config.MC_DEFAULT_MAX_STEPS
    level_cap: float = config.MC_DEFAULT_LEVEL_CAP
    escape_level: Optional[float] = None

    def __post_init__(self):
        if self.max_steps < 1:
            raise ModelError(f"max_steps must be >= 1, got {self.max_steps}")
        if not self.level_cap >= 0:
            raise ModelError(f"level_cap must be >= 0, got {self.level_cap}")
        if self.escape_level is not None and not self.escape_level > 0:
            raise ModelError(f"escape_level must be positive, got {self.escape_level}")

    @classmethod
    def default_for(cls, x: float, escape_level: Optional[float] = None) -> "Caps":
        return cls(
            max_steps=config.MC_DEFAULT_MAX_STEPS,
            level_cap=max(config.MC_LEVEL_CAP_FACTOR * x, config.MC_DEFAULT_LEVEL_CAP),
            escape_level=escape_level,
        )


class SurvivalReason(enum.Enum):
    HIT_CAP = "hit_cap"
    ESCAPED = "escaped"
    HORIZON_EXHAUSTED = "horizon_exhausted"


@dataclass(frozen=True)
class Ruined:
    step: int


@dataclass(frozen=True)
class Survived:
    reason: SurvivalReason


Outcome = Union[Ruined, Survived]


@dataclass(frozen=True)
class ChainPath:
    states: Tuple[float, ...]
    outcome: Outcome
    steps: int
    final_state: float


class JumpSampler:
    """Draws xi(x) = V_x(tau) - x - xi for arrays of levels; tau is drawn before xi."""

    def __init__(self, model: RiskModel, solver: Optional[FlowSolver] = None):
        self.model = model
        self.solver = solver or FlowSolver(model.rate)

    def jumps(self, xs: np.ndarray, rng: RngStream) -> np.ndarray:
        return self.jumps_with_draws(xs, rng)[0]

    def jumps_with_draws(self, xs: np.ndarray, rng: RngStream):
        xs = np.asarray(xs, dtype=float)
        n = xs.shape
        tau = self.model.claims.tau.sample(rng.generator, n)
        xi = self.model.claims.xi.sample(rng.generator, n)
        increment = np.asarray(flow(self.solver, xs, tau)) - xs
        return increment - xi, tau, xi

    def flow_increments(self, xs: np.ndarray, rng: RngStream) -> np.ndarray:
        """V_x(tau) - x for fresh tau draws, without a claim."""
        xs = np.asarray(xs, dtype=float)
        tau = self.model.claims.tau.sample(rng.generator, xs.shape)
        return np.asarray(flow(self.solver, xs, tau)) - xs


def sample_jump(model: RiskModel, x: float, rng: RngStream) -> float:
    if x < 0:
        raise ModelError(f"jump requested at negative level {x}")
    return float(JumpSampler(model).jumps(np.array([x]), rng)[0])


def sample_jumps(model: RiskModel, xs, rng: RngStream, return_draws: bool = False):
    xs = np.asarray(xs, dtype=float)
    if np.any(xs < 0):
        raise ModelError("jumps requested at negative levels")
    jumps, tau, xi = JumpSampler(model).jumps_with_draws(xs, rng)
    return (jumps, tau, xi) if return_draws else jumps


def _exit_reason(state: float, caps: Caps) -> Optional[SurvivalReason]:
    if state > caps.level_cap:
        return SurvivalReason.HIT_CAP
    if caps.escape_level is not None and state > caps.escape_level:
        return SurvivalReason.ESCAPED
    return None


def simulate_path(
    model: RiskModel,
    x0: float,
    caps: Caps,
    rng: RngStream,
    streaming: bool = False,
    chunk: int = config.MC_PATH_CHUNK,
) -> ChainPath:
    """
    Iterate R_{n+1} = R_n + xi(R_n) until ruin (R_n < 0), R_n > level_cap,
    R_n > escape_level or max_steps. In streaming mode only R_0 is kept.

    Draws come in fixed chunks, chunk values of tau then chunk values of xi, so
    the n-th step uses the same numbers whatever the caps are.
    """
    if x0 < 0:
        raise ModelError(f"initial reserve must be >= 0, got {x0}")
    sampler = JumpSampler(model)
    state = float(x0)
    states: List[float] = [state]
    reason = _exit_reason(state, caps)
    if reason is not None:
        return ChainPath((state,), Survived(reason), 0, state)

    step = 0
    while step < caps.max_steps:
        tau = model.claims.tau.sample(rng.generator, chunk)
        xi = model.claims.xi.sample(rng.generator, chunk)
        for t_draw, xi_draw in zip(tau, xi):
            step += 1
            state = float(flow(sampler.solver, state, t_draw)) - xi_draw
            if not streaming:
                states.append(state)
            if state < 0:
                return ChainPath(tuple(states), Ruined(step), step, state)
            reason = _exit_reason(state, caps)
            if reason is not None:
                return ChainPath(tuple(states), Survived(reason), step, state)
            if step == caps.max_steps:
                break
    return ChainPath(
        tuple(states), Survived(SurvivalReason.HORIZON_EXHAUSTED), step, state
    )


@dataclass
class BlockResult:
    n_paths: int
    ruined: int
    hit_cap: int
    escaped: int
    horizon: int
    final_states: np.ndarray = field(repr=False)
    outcome_codes: np.ndarray = field(repr=False)
    steps: np.ndarray = field(repr=False)


RUNNING, RUINED, HIT_CAP, HORIZON, ESCAPED = 0, 1, 2, 3, 4


def simulate_block(
    model: RiskModel,
    x0: float,
    n_paths: int,
    caps: Caps,
    seed: int,
    first_stream: int = 0,
    sampler: Optional[JumpSampler] = None,
    chunk: int = config.MC_PATH_CHUNK,
) -> BlockResult:
    """
    Vectorised simulate_path. Path j draws from RngStream(seed, first_stream + j)
    in the same chunks as simulate_path, so each path reproduces its scalar run
    and block boundaries do not change any outcome.
    """
    if x0 < 0:
        raise ModelError(f"initial reserve must be >= 0, got {x0}")
    sampler = sampler or JumpSampler(model)
    tau_law, xi_law = model.claims.tau, model.claims.xi
    states = np.full(n_paths, float(x0))
    codes = np.full(n_paths, RUNNING, dtype=np.int8)
    steps = np.zeros(n_paths, dtype=np.int64)
    escape = math.inf if caps.escape_level is None else caps.escape_level

    reason = _exit_reason(float(x0), caps)
    if reason is not None:
        codes[:] = HIT_CAP if reason is SurvivalReason.HIT_CAP else ESCAPED
        alive = np.empty(0, dtype=np.int64)
    else:
        alive = np.arange(n_paths)

    generators = [RngStream(seed, first_stream + j).generator for j in range(n_paths)]
    tau_draws = np.empty((n_paths, chunk))
    xi_draws = np.empty((n_paths, chunk))
    step = 0
    while alive.size and step < caps.max_steps:
        column = step % chunk
        if column == 0:
            for j in alive:
                tau_draws[j] = tau_law.sample(generators[j], chunk)
                xi_draws[j] = xi_law.sample(generators[j], chunk)
        current = (
            np.asarray(flow(sampler.solver, states[alive], tau_draws[alive, column]))
            - xi_draws[alive, column]
        )
        states[alive] = current
        step += 1
        ruined = current < 0
        capped = ~ruined & (current > caps.level_cap)
        escaped = ~ruined & ~capped & (current > escape)
        stopped = ruined | capped | escaped
        codes[alive[ruined]] = RUINED
        codes[alive[capped]] = HIT_CAP
        codes[alive[escaped]] = ESCAPED
        steps[alive[stopped]] = step
        alive = alive[~stopped]
    codes[alive] = HORIZON
    steps[alive] = step

    return BlockResult(
        n_paths=n_paths,
        ruined=int(np.count_nonzero(codes == RUINED)),
        hit_cap=int(np.count_nonzero(codes == HIT_CAP)),
        escaped=int(np.count_nonzero(codes == ESCAPED)),
        horizon=int(np.count_nonzero(codes == HORIZON)),
        final_states=states,
        outcome_codes=codes,
        steps=steps,
    )


@dataclass(frozen=True)
class MomentEstimate:
    order: int
    value: float
    stderr: float


def jump_moment_estimates(
    model: RiskModel, x: float, k_max: int, n_draws: int, rng: RngStream
) -> List[MomentEstimate]:
    """Empirical m_k(x) = E xi(x)^k for k = 1..k_max, accumulated over chunks."""
    if n_draws < 1000:
        raise ModelError(f"n_draws must be >= 1000, got {n_draws}")
    if k_max < 1:
        raise ModelError(f"k_max must be >= 1, got {k_max}")
    sampler = JumpSampler(model)
    orders = np.arange(1, k_max + 1)
    sums = np.zeros(k_max)
    sq_sums = np.zeros(k_max)
    chunk = max(config.MC_BLOCK_SIZE, 1 << 20)
    done = 0
    while done < n_draws:
        size = min(chunk, n_draws - done)
        jumps = sampler.jumps(np.full(size, float(x)), rng)
        powers = jumps[:, None] ** orders[None, :]
        sums += powers.sum(axis=0)
        sq_sums += (powers**2).sum(axis=0)
        done += size
    means = sums / n_draws
    variances = np.maximum(sq_sums / n_draws - means**2, 0.0)
    stderrs = np.sqrt(variances / n_draws)
    logger.debug(f"Jump moments at x={x}: {means.tolist()}")
    return [
        MomentEstimate(order=int(k), value=float(m), stderr=float(s))
        for k, m, s in zip(orders, means, stderrs)
    ]


def scaled_drift(model: RiskModel, x: float, n_draws: int, rng: RngStream) -> MomentEstimate:
    """
    x m_1(x) with v_c tau as control variate. E[v_c tau] = E xi, so
    xi(x) + xi - v_c tau = V_x(tau) - x - v_c tau keeps the mean of x m_1(x) / x
    without the claim noise; the result tends to theta E tau for inverse rates.
    """
    if n_draws < 1000:
        raise ModelError(f"n_draws must be >= 1000, got {n_draws}")
    sampler = JumpSampler(model)
    chunk = max(config.MC_BLOCK_SIZE, 1 << 20)
    total = total_sq = 0.0
    done = 0
    while done < n_draws:
        size = min(chunk, n_draws - done)
        jumps, tau, xi = sampler.jumps_with_draws(np.full(size, float(x)), rng)
        excess = x * (jumps + xi - model.v_c * tau)
        total += float(excess.sum())
        total_sq += float((excess**2).sum())
        done += size
    mean = total / n_draws
    variance = max(total_sq / n_draws - mean**2, 0.0)
    logger.debug(f"Scaled drift at x={x}: {mean:.4g}")
    return MomentEstimate(order=1, value=mean, stderr=math.sqrt(variance / n_draws))
