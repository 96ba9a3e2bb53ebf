"""
Truncated auxiliary chain: jumps from level y are conditioned on xi(y) >= -y/2,
so a path never jumps below half its level and ruin can only come from one
big claim. Its occupation measure controls the big-jump term of

    psi(x) <= psi_tilde(x) + E sum_n (1 - g(R~_n)),   g(y) = P{xi(y) >= -y/2}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

import config
from embedded_chain.chain import Caps, JumpSampler
from embedded_chain.rng import RngStream
from heavy_tail.karamata import heavy_regime
from monte_carlo.estimator import estimate_ruin
from monte_carlo.parallel import block_sizes, run_blocks
from reserve_flow.flow import flow
from stochastic_model.claims import ParetoType
from stochastic_model.risk_model import RiskModel
from utilities.errors import ModelError, NumericalError
from utilities.logger import Logger

logger = Logger.get_logger()

# disjoint from the stream ranges of ruin_curve grids
_RUIN_STREAM_BASE = 1 << 48
_G_STREAM_BASE = 1 << 50


def sample_truncated_jumps(
    model: RiskModel, xs, rng: RngStream, sampler: Optional[JumpSampler] = None
) -> Tuple[np.ndarray, float]:
    """Jumps at levels xs redrawn until xi(x) >= -x/2; returns (jumps, acceptance rate)."""
    sampler = sampler or JumpSampler(model)
    xs = np.asarray(xs, dtype=float)
    jumps = np.empty_like(xs)
    pending = np.arange(xs.size)
    proposals = accepted = 0
    for _ in range(config.HEAVY_MAX_REJECTION_ROUNDS):
        if pending.size == 0:
            break
        draws = sampler.jumps(xs[pending], rng)
        ok = draws >= -xs[pending] / 2
        jumps[pending[ok]] = draws[ok]
        proposals += pending.size
        accepted += int(ok.sum())
        pending = pending[~ok]
        if proposals >= 1000 and accepted / proposals < config.HEAVY_MIN_ACCEPTANCE:
            break
    acceptance = accepted / proposals if proposals else 1.0
    if pending.size or acceptance < config.HEAVY_MIN_ACCEPTANCE:
        logger.error(f"Truncated jump acceptance {acceptance:.2e} below floor")
        raise NumericalError(
            f"rejection acceptance {acceptance:.2e} below {config.HEAVY_MIN_ACCEPTANCE:g}"
        )
    return jumps, acceptance


def conditional_left_tail(
    model: RiskModel, x: float, thresholds, n_draws: int, rng: RngStream
) -> Tuple[np.ndarray, np.ndarray]:
    """
    P{xi(x) < -y} for each y in thresholds as E tail(y + V_x(tau) - x), with
    standard errors. Conditioning on tau keeps every term in [0, tail(y)].
    """
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    increments = JumpSampler(model).flow_increments(np.full(n_draws, float(x)), rng)
    values = model.claims.xi.tail(thresholds[:, None] + increments[None, :])
    means = values.mean(axis=1)
    stderrs = values.std(axis=1, ddof=1) / math.sqrt(n_draws)
    return means, stderrs


def _left_tail_block(task):
    model, x, ys, size, seed, stream_id = task
    increments = JumpSampler(model).flow_increments(
        np.full(size, float(x)), RngStream(seed, stream_id)
    )
    values = model.claims.xi.tail(np.asarray(ys)[:, None] + increments[None, :])
    return values.sum(axis=1), (values**2).sum(axis=1)


def left_tail_check(
    model: RiskModel,
    xs: Sequence[float],
    ys: Sequence[float],
    n_draws: int,
    seed: int = 0,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """P{xi(x) < -y} / P{xi > y} over a grid; at most 1, tending to 1 for large y."""
    if n_draws < 2:
        raise ModelError("left tail check needs n_draws >= 2")
    ys = np.asarray(ys, dtype=float)
    tasks, per_level = [], []
    for i, x in enumerate(xs):
        sizes = block_sizes(n_draws)
        per_level.append(len(sizes))
        tasks.extend((model, float(x), ys, size, seed, (i << 32) + k) for k, size in enumerate(sizes))
    blocks = run_blocks(_left_tail_block, tasks, threads)

    rows, start = [], 0
    tail_y = model.claims.xi.tail(ys)
    for x, n_blocks in zip(xs, per_level):
        level = blocks[start : start + n_blocks]
        start += n_blocks
        total = sum(block[0] for block in level)
        total_sq = sum(block[1] for block in level)
        mean = total / n_draws
        se = np.sqrt(np.maximum(total_sq - n_draws * mean**2, 0.0) / (n_draws - 1) / n_draws)
        for y, m, s, t in zip(ys, mean, se, tail_y):
            rows.append({"x": float(x), "y": float(y), "ratio": m / t, "stderr": s / t})
    return pd.DataFrame(rows, columns=["x", "y", "ratio", "stderr"])


def level_grid(level_cap: float, n_levels: int = 40) -> np.ndarray:
    """0 followed by log-spaced levels from 1 up to the cap."""
    top = max(level_cap, 1.0)
    return np.concatenate(([0.0], np.geomspace(1.0, top, n_levels)))


def _g_block(task):
    model, levels, size, seed, stream_id = task
    rng = RngStream(seed, stream_id)
    sampler = JumpSampler(model)
    out = []
    for level in levels:
        increments = sampler.flow_increments(np.full(size, float(level)), rng)
        out.append(float(model.claims.xi.tail(level / 2 + increments).sum()))
    return np.array(out)


def _truncated_block(task):
    model, x, size, caps, g_hat, levels, seed, stream_id = task
    rng = RngStream(seed, stream_id)
    sampler = JumpSampler(model)
    miss = 1.0 - g_hat
    n_bins = len(levels)

    states = np.full(size, float(x))
    counts = np.zeros(n_bins)
    weights = np.zeros(size)
    down = states <= config.HEAVY_DOWN_LEVEL
    ruined = np.zeros(size, dtype=bool)
    alive = np.arange(size) if x <= caps.level_cap else np.empty(0, dtype=np.int64)
    acceptances = []

    def visit(indices):
        bins = np.clip(np.searchsorted(levels, states[indices], side="right") - 1, 0, n_bins - 1)
        np.add.at(counts, bins, 1.0)
        weights[indices] += miss[bins]

    visit(alive)
    for _ in range(caps.max_steps):
        if alive.size == 0:
            break
        jumps, acceptance = sample_truncated_jumps(model, states[alive], rng, sampler)
        acceptances.append(acceptance)
        states[alive] += jumps
        current = states[alive]
        ruined[alive[current < 0]] = True
        down[alive[current <= config.HEAVY_DOWN_LEVEL]] = True
        alive = alive[(current >= 0) & (current <= caps.level_cap)]
        visit(alive)
    return (
        counts,
        float(weights.sum()),
        float((weights**2).sum()),
        int(down.sum()),
        int(ruined.sum()),
        min(acceptances, default=1.0),
    )


@dataclass(frozen=True)
class TruncatedChainStats:
    x: float
    n_paths: int
    g_table: pd.DataFrame = field(repr=False, compare=False)
    renewal_mass: pd.DataFrame = field(repr=False, compare=False)
    psi_tilde_hat: float
    down_crossing_hat: float
    psi_hat: float
    rhs: float
    rhs_se: float
    slack: float
    acceptance: float


def truncated_diagnostics(
    model: RiskModel,
    x: float,
    n_paths: int,
    caps: Optional[Caps] = None,
    seed: int = 0,
    threads: Optional[int] = None,
    n_levels: int = 40,
    n_g_draws: int = 10_000,
) -> TruncatedChainStats:
    """
    Simulates the truncated chain from x, estimates g on a level grid (at the
    left bin edges, where 1 - g is largest), counts occupation of the bins and
    checks psi_hat <= psi_tilde_hat + E sum (1 - g) up to 3 standard errors.
    """
    heavy_regime(model)
    if n_paths < 2:
        raise ModelError("truncated diagnostics need n_paths >= 2")
    caps = caps or Caps.default_for(x)
    levels = level_grid(caps.level_cap, n_levels)

    g_tasks = [
        (model, levels, size, seed, _G_STREAM_BASE + k)
        for k, size in enumerate(block_sizes(n_g_draws))
    ]
    g_hat = 1.0 - sum(run_blocks(_g_block, g_tasks, threads)) / n_g_draws
    g_hat = np.clip(g_hat, np.finfo(float).tiny, 1.0)

    tasks = [
        (model, float(x), size, caps, g_hat, levels, seed, k)
        for k, size in enumerate(block_sizes(n_paths))
    ]
    blocks = run_blocks(_truncated_block, tasks, threads)
    counts = sum(block[0] for block in blocks)
    w_sum = sum(block[1] for block in blocks)
    w_sq = sum(block[2] for block in blocks)
    down = sum(block[3] for block in blocks)
    tilde_ruined = sum(block[4] for block in blocks)
    acceptance = min(block[5] for block in blocks)

    rhs_paths = w_sum / n_paths
    rhs_se = math.sqrt(max(w_sq - n_paths * rhs_paths**2, 0.0) / (n_paths - 1) / n_paths)
    psi_tilde_hat = tilde_ruined / n_paths
    rhs = psi_tilde_hat + rhs_paths
    psi_hat = estimate_ruin(
        model, x, n_paths, caps=caps, seed=seed, threads=threads, stream_base=_RUIN_STREAM_BASE
    ).p_hat
    slack = rhs + 3 * rhs_se - psi_hat

    upper_edges = np.append(levels[1:], caps.level_cap)
    stats_ = TruncatedChainStats(
        x=float(x),
        n_paths=n_paths,
        g_table=pd.DataFrame({"level": levels, "g_hat": g_hat}),
        renewal_mass=pd.DataFrame({"level": upper_edges, "mass": np.cumsum(counts) / n_paths}),
        psi_tilde_hat=psi_tilde_hat,
        down_crossing_hat=down / n_paths,
        psi_hat=psi_hat,
        rhs=rhs,
        rhs_se=rhs_se,
        slack=slack,
        acceptance=acceptance,
    )
    logger.info(
        f"Truncated chain x={x}: psi_hat={psi_hat:.4g} <= {rhs:.4g} (+{3 * rhs_se:.2g}), "
        f"down-crossing {stats_.down_crossing_hat:.4g}"
    )
    if slack < 0:
        logger.warning(f"Decomposition check failed at x={x}: slack={slack:.3g}")
    return stats_


@dataclass(frozen=True)
class LowerBoundEstimate:
    x: float
    delta: float
    n_steps: int
    confinement: float
    c_hat: float
    lower: float


def _confinement_block(task):
    model, x, size, n_steps, seed, stream_id = task
    rng = RngStream(seed, stream_id)
    sampler = JumpSampler(model)
    states = np.full(size, float(x))
    inside = np.ones(size, dtype=bool)
    for _ in range(n_steps):
        alive = np.flatnonzero(inside)
        if alive.size == 0:
            break
        states[alive] += sampler.jumps(states[alive], rng)
        inside[alive] = (states[alive] >= x / 2) & (states[alive] <= 2 * x)
    return int(inside.sum())


def lower_bound_estimate(
    model: RiskModel,
    x: float,
    delta: float,
    seed: int = 0,
    n_paths: int = 10_000,
    threads: Optional[int] = None,
    n_draws: int = 100_000,
) -> LowerBoundEstimate:
    """
    Lower estimate c_hat * N * P_x{R_k in [x/2, 2x] for all k <= N} with N = ceil(delta x^2)
    and c_hat = P{xi(2x) < -2x}.
    """
    if x <= 0 or delta <= 0:
        raise ModelError("lower bound estimate needs x > 0 and delta > 0")
    n_steps = int(math.ceil(delta * x**2))
    tasks = [
        (model, float(x), size, n_steps, seed, k) for k, size in enumerate(block_sizes(n_paths))
    ]
    confinement = sum(run_blocks(_confinement_block, tasks, threads)) / n_paths
    c_hat, _ = conditional_left_tail(
        model, 2 * x, 2 * x, n_draws, RngStream(seed, _RUIN_STREAM_BASE - 1)
    )
    c_hat = float(c_hat[0])
    estimate = LowerBoundEstimate(
        x=float(x),
        delta=delta,
        n_steps=n_steps,
        confinement=confinement,
        c_hat=c_hat,
        lower=c_hat * n_steps * confinement,
    )
    logger.info(f"Lower bound estimate x={x}: N={n_steps} confinement={confinement:.4g} lower={estimate.lower:.4g}")
    return estimate


@dataclass(frozen=True)
class KsResult:
    statistic: float
    pvalue: float
    critical: float

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical


def _conditional_jumps(model: RiskModel, x: float, size: int, rng: RngStream) -> np.ndarray:
    """
    Truncated jumps without joint rejection: tau is accepted with probability
    P{xi <= V_x(tau) - x + x/2}, then xi is drawn from its law cut at that bound.
    """
    xi = model.claims.xi
    if not isinstance(xi, ParetoType):
        raise ModelError("conditional sampler needs Pareto-type claims")
    sampler = JumpSampler(model)
    out = []
    collected = 0
    while collected < size:
        tau = model.claims.tau.sample(rng.generator, size)
        increment = np.asarray(flow(sampler.solver, np.full(size, float(x)), tau)) - x
        bound = increment + x / 2
        cdf_bound = 1.0 - xi.tail(bound)
        keep = rng.generator.random(size) < cdf_bound
        u = rng.generator.random(int(keep.sum())) * cdf_bound[keep]
        claims = xi.scale * ((1.0 - u) ** (-1.0 / xi.tail_index) - 1.0)
        out.append(increment[keep] - claims)
        collected += int(keep.sum())
    return np.concatenate(out)[:size]


def truncated_jump_ks(model: RiskModel, x: float, n_draws: int, seed: int = 0) -> KsResult:
    """Two-sample KS between rejection-sampled truncated jumps and the conditional sampler."""
    rejected, _ = sample_truncated_jumps(model, np.full(n_draws, float(x)), RngStream(seed, 0))
    conditional = _conditional_jumps(model, x, n_draws, RngStream(seed, 1))
    result = stats.ks_2samp(rejected, conditional)
    critical = 1.36 * math.sqrt(2.0 / n_draws)
    return KsResult(statistic=float(result.statistic), pvalue=float(result.pvalue), critical=critical)
