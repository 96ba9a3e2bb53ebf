"""
Test functions U(x) = int_x^inf e^{-Q(s)} ds built from a drift target q and their
perturbed versions U_+/U_- obtained from q +/- p.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, optimize

import config
from lyapunov_bounds.power_case import PowerCase, power_case_for, shape_value
from stochastic_model.premium_rate import CriticalInverse
from stochastic_model.risk_model import RiskModel
from utilities.errors import ModelError
from utilities.logger import Logger

logger = Logger.get_logger()

ENVELOPE_DECAY = 1.5
_SIGNS = {"plus": 1.0, "minus": -1.0, "none": 0.0}


def _scalar_out(method):
    @functools.wraps(method)
    def wrapper(self, x):
        out = method(self, x)
        return float(out) if np.ndim(out) == 0 else out

    return wrapper


@functools.lru_cache(maxsize=4)
def _legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


@dataclass(frozen=True)
class LyapunovProfile:
    """
    The inverse-rate profile uses q = (rho+1) min(1, 1/x); the power profile uses
    the series q of a PowerCase. The envelope is p = min(q, x^{-3/2}) for x >= 1
    and p(1) below, switching at the recorded crossings.
    """

    rho: Optional[float]
    power_case: Optional[PowerCase] = None
    crossings: Tuple[float, ...] = ()
    x_hat: Optional[float] = None

    # ---- drift target

    @_scalar_out
    def q(self, x):
        x = np.asarray(x, dtype=float)
        if self.power_case is not None:
            return self.power_case.q(x)
        c = self.rho + 1.0
        return np.where(x <= 1.0, c, c / np.maximum(x, 1.0))

    @_scalar_out
    def Q(self, x):
        x = np.asarray(x, dtype=float)
        if self.power_case is not None:
            return self.power_case.Q(x)
        c = self.rho + 1.0
        return np.where(
            x <= 0.0, 0.0, np.where(x <= 1.0, c * x, c * (1.0 + np.log(np.maximum(x, 1.0))))
        )

    @_scalar_out
    def U(self, x):
        if self.power_case is not None:
            return self._tail_integral("none", x)
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        rho, c = self.rho, self.rho + 1.0
        at_one = math.exp(-c) / rho
        return np.where(
            x >= 1.0,
            math.exp(-c) / (rho * np.maximum(x, 1.0) ** rho),
            (np.exp(-c * x) - math.exp(-c)) / c + at_one,
        )

    # ---- envelope p and its integral P

    @property
    def p_one(self) -> float:
        return float(min(self.q(1.0), 1.0))

    @_scalar_out
    def p(self, x):
        x = np.asarray(x, dtype=float)
        above = np.minimum(self.q(x), np.maximum(x, 1.0) ** -ENVELOPE_DECAY)
        return np.where(x < 1.0, self.p_one, above)

    def segments(self) -> Tuple[Tuple[float, float, str], ...]:
        """Pieces of [1, inf) on which p follows q ('q') or x^{-3/2} ('power')."""
        edges = (1.0,) + tuple(self.crossings) + (math.inf,)
        pieces = []
        for a, b in zip(edges[:-1], edges[1:]):
            mid = 2.0 * a if math.isinf(b) else 0.5 * (a + b)
            kind = "q" if float(self.q(mid)) <= mid**-ENVELOPE_DECAY else "power"
            pieces.append((a, b, kind))
        return tuple(pieces)

    @_scalar_out
    def P(self, x):
        x = np.asarray(x, dtype=float)
        out = self.p_one * np.clip(x, 0.0, 1.0)
        for a, b, kind in self.segments():
            hi = np.clip(x, a, b)
            if kind == "q":
                out = out + (self.Q(hi) - self.Q(a))
            else:
                out = out + 2.0 * (a**-0.5 - hi**-0.5)
        return out

    @property
    def C_p(self) -> float:
        a, _, kind = self.segments()[-1]
        if kind == "q":
            raise ModelError("envelope p is not integrable: q decays faster than x^{-3/2}")
        return float(self.P(a)) + 2.0 * a**-0.5

    # ---- perturbed versions

    def q_plus(self, x):
        return self.q(x) + self.p(x)

    def q_minus(self, x):
        return self.q(x) - self.p(x)

    def Q_plus(self, x):
        return self.Q(x) + self.P(x)

    def Q_minus(self, x):
        return self.Q(x) - self.P(x)

    def U_plus(self, x):
        return self._tail_integral("plus", x)

    def U_minus(self, x):
        return self._tail_integral("minus", x)

    def with_x_hat(self, x_hat: Optional[float]) -> "LyapunovProfile":
        return replace(self, x_hat=x_hat)

    # ---- integration

    def _density(self, which: str, s):
        return np.exp(-(self.Q(s) + _SIGNS[which] * self.P(s)))

    def breakpoints(self) -> Tuple[float, ...]:
        return (0.0, 1.0) + tuple(self.crossings)

    def _tail_integral(self, which: str, x):
        """int_x^inf e^{-Q_which}; flat below 0."""
        x_arr = np.maximum(np.asarray(x, dtype=float), 0.0)
        values = np.array([self._tail_integral_scalar(which, float(v)) for v in x_arr.ravel()])
        values = values.reshape(x_arr.shape)
        return float(values) if values.ndim == 0 else values

    def _tail_integral_scalar(self, which: str, x: float) -> float:
        def linear(s):
            return float(self._density(which, s))

        def logarithmic(w):
            if w > 700.0:
                return 0.0
            s = math.exp(w)
            return float(self._density(which, s)) * s

        quad_kwargs = dict(epsabs=0.0, epsrel=1e-12, limit=config.QUAD_LIMIT)
        total = 0.0
        if x < 1.0:
            total += integrate.quad(linear, x, 1.0, **quad_kwargs)[0]
        start = math.log(max(x, 1.0))
        edges = [start] + [math.log(c) for c in self.crossings if c > max(x, 1.0)] + [math.inf]
        for a, b in zip(edges[:-1], edges[1:]):
            total += integrate.quad(logarithmic, a, b, **quad_kwargs)[0]
        return total


def u_increment(profile: LyapunovProfile, which: str, x, targets) -> np.ndarray:
    """
    U_which(targets) - U_which(x) = int_{max(target, 0)}^{x} e^{-Q_which(s)} ds,
    signed, by Gauss-Legendre on pieces split at the profile's breakpoints.
    Pieces above 1 are integrated in log s.
    """
    targets = np.maximum(np.asarray(targets, dtype=float), 0.0)
    x = np.broadcast_to(np.asarray(x, dtype=float), targets.shape)
    low, high = np.minimum(targets, x), np.maximum(targets, x)
    sign = np.where(targets < x, 1.0, -1.0)
    nodes, weights = _legendre(config.GAUSS_LEGENDRE_NODES)
    edges = list(profile.breakpoints()) + [math.inf]

    total = np.zeros(targets.shape)
    for k, (e0, e1) in enumerate(zip(edges[:-1], edges[1:])):
        a = np.clip(low, e0, e1)
        b = np.clip(high, e0, e1)
        active = b > a
        if not active.any():
            continue
        a, b = a[active], b[active]
        if k == 0:
            half, mid = 0.5 * (b - a), 0.5 * (b + a)
            points = mid[:, None] + half[:, None] * nodes[None, :]
            values = profile._density(which, points)
        else:
            la, lb = np.log(a), np.log(b)
            half, mid = 0.5 * (lb - la), 0.5 * (lb + la)
            points = np.exp(mid[:, None] + half[:, None] * nodes[None, :])
            values = profile._density(which, points) * points
        total[active] = half * (values * weights[None, :]).sum(axis=1)
    return sign * total


def _crossings(profile: LyapunovProfile) -> Tuple[float, ...]:
    """Levels x >= 1 where q(x) = x^{-3/2}."""

    def gap(x):
        return math.log(float(profile.q(x))) + ENVELOPE_DECAY * math.log(x)

    grid = np.geomspace(1.0, config.BOUNDS_SHIFT_GRID_MAX, 400)
    values = [gap(x) for x in grid]
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if fa == 0.0 and a > 1.0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(float(optimize.brentq(gap, a, b, xtol=1e-14, rtol=1e-12)))
    return tuple(roots)


def _with_envelope(profile: LyapunovProfile) -> LyapunovProfile:
    return replace(profile, crossings=_crossings(profile))


def inverse_profile(rho: float) -> LyapunovProfile:
    if rho <= 0:
        logger.error(f"Refusing inverse profile with rho={rho}")
        raise ModelError(f"recurrent or critical: rho={rho:g} <= 0")
    return _with_envelope(LyapunovProfile(rho=float(rho)))


def build_profile_inverse(model: RiskModel) -> LyapunovProfile:
    if not isinstance(model.rate, CriticalInverse):
        raise ModelError("inverse profile needs a critical_inverse rate")
    rho = model.derived_constants().rho
    if rho is None:
        raise ModelError("recurrent or critical: degenerate jumps (b = 0)")
    profile = inverse_profile(rho)
    logger.info(f"Inverse profile rho={rho:g}, C_p={profile.C_p:g}")
    return profile


def build_profile_power(model: RiskModel) -> LyapunovProfile:
    power_case = power_case_for(model)
    profile = _with_envelope(LyapunovProfile(rho=None, power_case=power_case))
    logger.info(f"Power profile r={power_case.r}, b_shift={power_case.b_shift}")
    return profile


def build_profile(model: RiskModel) -> LyapunovProfile:
    if isinstance(model.rate, CriticalInverse):
        return build_profile_inverse(model)
    return build_profile_power(model)


def profile_table(profile: LyapunovProfile, xs: Sequence[float]) -> pd.DataFrame:
    xs = np.asarray(xs, dtype=float)
    return pd.DataFrame(
        {
            "x": xs,
            "q": profile.q(xs),
            "Q": profile.Q(xs),
            "U": profile.U(xs),
            "U_plus": profile.U_plus(xs),
            "U_minus": profile.U_minus(xs),
        }
    )


def power_case_shape(profile: LyapunovProfile, x):
    if profile.power_case is None:
        raise ModelError("profile has no power case")
    return shape_value(profile.power_case, x)
