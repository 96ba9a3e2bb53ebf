from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

import config
from stochastic_model.premium_rate import (
    Constant,
    CriticalInverse,
    CriticalPower,
    PremiumRateSpec,
    Tabulated,
    envelope_value,
    evaluate_rate,
    is_critical,
)
from stochastic_model.risk_model import RiskModel
from utilities.errors import ModelError, NumericalError
from utilities.logger import Logger

logger = Logger.get_logger()


class FlowMethod(enum.Enum):
    ANALYTIC = "analytic"
    IMPLICIT_SEPARABLE = "implicit_separable"
    RUNGE_KUTTA = "runge_kutta"


_AUTO_METHOD = {
    Constant: FlowMethod.ANALYTIC,
    Tabulated: FlowMethod.ANALYTIC,
    CriticalInverse: FlowMethod.IMPLICIT_SEPARABLE,
    CriticalPower: FlowMethod.RUNGE_KUTTA,
}


@dataclass(frozen=True)
class FlowSolver:
    """
    Deterministic reserve between claims: V' = v(V), V(0) = x.

    method None picks the exact route for the rate family. h_max None means the
    level-proportional default min(t, 0.01 x + 0.01).
    """

    rate: PremiumRateSpec
    method: Optional[FlowMethod] = None
    h_max: Optional[float] = None
    rel_tol: float = config.FLOW_REL_TOL

    def __post_init__(self):
        if self.method is None:
            object.__setattr__(self, "method", _AUTO_METHOD[type(self.rate)])
        if self.method is FlowMethod.ANALYTIC and not isinstance(self.rate, (Constant, Tabulated)):
            raise ModelError(f"no closed-form flow for {type(self.rate).__name__}")
        if self.method is FlowMethod.IMPLICIT_SEPARABLE and not isinstance(
            self.rate, (Constant, CriticalInverse)
        ):
            raise ModelError(f"no separable solution for {type(self.rate).__name__}")
        if self.h_max is not None and not self.h_max > 0:
            raise ModelError(f"h_max must be positive, got {self.h_max}")
        if not self.rel_tol > 0:
            raise ModelError(f"rel_tol must be positive, got {self.rel_tol}")


def flow(solver: FlowSolver, x, t):
    """V_x(t); broadcasts over arrays of x and t."""
    x_arr, t_arr = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    if np.any(x_arr < 0) or np.any(t_arr < 0):
        logger.error("Flow requested with negative level or time")
        raise ModelError("flow requires x >= 0 and t >= 0")
    shape = x_arr.shape
    x_arr, t_arr = x_arr.astype(float).ravel(), t_arr.astype(float).ravel()
    rate = solver.rate

    if isinstance(rate, Constant):
        out = x_arr + rate.v * t_arr
    elif solver.method is FlowMethod.ANALYTIC:
        out = _tabulated_flow(rate, x_arr, t_arr)
    elif solver.method is FlowMethod.IMPLICIT_SEPARABLE:
        out, converged = _inverse_flow(rate, x_arr, t_arr)
        if not converged.all():
            logger.warning(
                f"Newton did not converge for {int((~converged).sum())} flow evaluations; using RK4"
            )
            out[~converged] = _rk4_flow(solver, x_arr[~converged], t_arr[~converged])
    else:
        out = _rk4_flow(solver, x_arr, t_arr)

    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def _tabulated_flow(rate: Tabulated, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    levels, rates = rate.levels, rate.rates
    last = len(levels) - 1
    pos, remaining = x.copy(), t.copy()
    seg = np.clip(np.searchsorted(levels, pos, side="right") - 1, 0, last)
    active = remaining > 0
    # at most one segment boundary is crossed per pass
    while active.any():
        idx = np.flatnonzero(active)
        r = rates[seg[idx]]
        boundary = np.where(seg[idx] < last, levels[np.minimum(seg[idx] + 1, last)], np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            time_to = np.where(r > 0, (boundary - pos[idx]) / r, np.inf)
        finishes = remaining[idx] <= time_to
        done = idx[finishes]
        pos[done] += rates[seg[done]] * remaining[done]
        remaining[done] = 0.0
        moving = idx[~finishes]
        pos[moving] = boundary[~finishes]
        remaining[moving] -= time_to[~finishes]
        seg[moving] += 1
        active = remaining > 0
    return pos


def _inverse_flow(
    rate: CriticalInverse, x: np.ndarray, t: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    v_c, theta, z_min = rate.v_c, rate.theta, rate.z_min
    r0 = v_c + theta / z_min
    out = np.empty_like(x)
    converged = np.ones(x.shape, dtype=bool)

    # constant rate r0 below the floor level
    t_reach = np.where(x < z_min, (z_min - x) / r0, 0.0)
    stays = (x < z_min) & (t <= t_reach)
    out[stays] = x[stays] + r0 * t[stays]

    go = ~stays
    start = np.maximum(x[go], z_min)
    rem = t[go] - t_reach[go]
    d, ok = _inverse_increment(v_c, theta, start, rem)
    out[go] = start + d
    converged[go] = ok
    return out, converged


def _inverse_increment(v_c, theta, x, t) -> Tuple[np.ndarray, np.ndarray]:
    """
    Solve F(d) = d/v_c - (theta/v_c^2) log1p(v_c d / (v_c x + theta)) - t = 0.

    F is convex and increasing; Newton started at the upper bound (v_c + theta/x) t
    decreases monotonically to the root.
    """
    c = v_c * x + theta
    d = (v_c + theta / x) * t
    converged = np.zeros(x.shape, dtype=bool)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(config.FLOW_NEWTON_MAX_ITER):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        di, xi = d[idx], x[idx]
        f = di / v_c - theta / v_c**2 * np.log1p(v_c * di / c[idx]) - t[idx]
        fp = (xi + di) / (v_c * (xi + di) + theta)
        step = f / fp
        d[idx] = np.maximum(di - step, 0.0)
        small = np.abs(step) <= 4 * np.finfo(float).eps * (xi + di)
        converged[idx[small]] = True
        active[idx[small]] = False
    return d, converged


def _rk4_flow(solver: FlowSolver, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Adaptive RK4 with step doubling, vectorised over independent initial values."""
    rate, rel_tol = solver.rate, solver.rel_tol
    h_cap = (
        np.minimum(t, 0.01 * x + 0.01) if solver.h_max is None else np.full_like(t, solver.h_max)
    )
    h_floor = np.maximum(h_cap, 1e-300) * 2.0 ** (-config.FLOW_RK_MAX_HALVINGS)
    pos, remaining, h = x.copy(), t.copy(), h_cap.copy()
    active = remaining > 0

    def v(z):
        return evaluate_rate(rate, np.maximum(z, 0.0))

    def step(y, dt):
        k1 = v(y)
        k2 = v(y + 0.5 * dt * k1)
        k3 = v(y + 0.5 * dt * k2)
        k4 = v(y + dt * k3)
        return y + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0

    while active.any():
        idx = np.flatnonzero(active)
        y = pos[idx]
        dt = np.minimum(h[idx], remaining[idx])
        full = step(y, dt)
        half = step(step(y, 0.5 * dt), 0.5 * dt)
        err = np.abs(half - full) / 15.0
        tol = rel_tol * np.abs(half - y) + config.FLOW_ABS_FLOOR
        accept = err <= tol

        acc = idx[accept]
        pos[acc] = half[accept] + (half[accept] - full[accept]) / 15.0
        remaining[acc] = np.where(
            dt[accept] >= remaining[acc], 0.0, remaining[acc] - dt[accept]
        )
        grow = accept & (err < tol / 32.0)
        h[idx[grow]] = np.minimum(2.0 * h[idx[grow]], h_cap[idx[grow]])

        rej = idx[~accept]
        h[rej] *= 0.5
        if np.any(h[rej] < h_floor[rej]):
            logger.error("RK4 step size underflow")
            raise NumericalError("RK4 flow step size underflow")
        active = remaining > 0
    return pos


def flow_increment_bounds(model: RiskModel, x, t):
    """
    (lower, upper) for V_x(t) - x from the decreasing sandwich
    v_-(z) <= v(z) <= v_+(z), v_pm(z) = v_c + theta / z^alpha +- p(z).
    """
    rate = model.rate
    if not is_critical(rate):
        logger.error(f"Increment bounds requested for {type(rate).__name__}")
        raise ModelError("flow_increment_bounds needs a critical (inverse or power) rate")
    x_arr = np.asarray(x, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(x_arr < 0) or np.any(t_arr < 0):
        raise ModelError("flow_increment_bounds requires x >= 0 and t >= 0")

    def v_pm(z, sign):
        base = rate.v_c + rate.theta / np.maximum(z, rate.z_min) ** rate.alpha
        return base + sign * envelope_value(rate, z)

    upper = t_arr * v_pm(x_arr, +1.0)
    lower = t_arr * v_pm(x_arr + upper, -1.0)
    if upper.ndim == 0:
        return float(lower), float(upper)
    return lower, upper
